"""Brute-force expiration oracle: direct quantifier evaluation over history.

This is the slow, obviously-correct reference the cache is tested against.
A transaction is expired at block B when some other transaction hit the
same contract from a different sender strictly after the state the test
observed (``block >= tx.block_included``, i.e. after fork base) and no
later than B. ``sender_blind=True`` drops the different-sender clause,
matching the strict cache mode.
"""

from __future__ import annotations

from typing import Iterable, Protocol

from ..chain.types import Address
from .cache import EXPIRED, UNEXPIRED


class TxLike(Protocol):
    sender: Address
    recipient: Address
    block_included: int | None


def brute_force_expiration(history: Iterable[TxLike], tx: TxLike,
                           at_block: int, *, sender_blind: bool = False) -> str:
    """Linear scan of the full log from genesis; the testing oracle."""
    base = tx.block_included - 1  # last block whose state the test saw
    for other in history:
        if other.block_included is None:
            continue
        if (other.recipient == tx.recipient
                and (sender_blind or other.sender != tx.sender)
                and base < other.block_included <= at_block):
            return EXPIRED
    return UNEXPIRED
