"""Retry success probability for expired tests.

An expired test can simply be repeated; with single-attempt success
probability p, the chance that at least one of k attempts lands inside its
validity window is 1 - (1 - p)^k.
"""

from __future__ import annotations

from ..errors import DomainError


def retry_success_probability(p_single: float, k: int) -> float:
    if not 0.0 <= p_single <= 1.0:
        raise DomainError(f"p_single must be within [0, 1], got {p_single}")
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    return 1.0 - (1.0 - p_single) ** k
