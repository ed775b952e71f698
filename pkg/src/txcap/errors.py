"""Shared exception taxonomy.

Every error carries a stable ``code`` used by the CLI (exit status mapping)
and the HTTP service (the ``code`` field of error bodies).
"""

from __future__ import annotations


class TxcapError(Exception):
    """Base class for all artifact errors."""

    code = "error"

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.code)
        self.detail = detail or self.code


class ValidationFailure(TxcapError):
    """Input rejected before any state transition happened."""

    code = "validation"


class NonceMismatch(ValidationFailure):
    code = "nonce_mismatch"


class InsufficientFunds(ValidationFailure):
    code = "insufficient_funds"


class UnknownRecipientCode(ValidationFailure):
    code = "unknown_recipient_code"


class UnminedTransaction(ValidationFailure):
    code = "unmined_transaction"


class DomainError(ValidationFailure):
    code = "domain_error"


class UnknownNode(ValidationFailure):
    code = "unknown_node"


class NodeSyncing(TxcapError):
    code = "node_syncing"


class NotUnderpriced(ValidationFailure):
    """A test transaction priced at or above the network floor would propagate."""

    code = "not_underpriced"


class SequenceRuleViolation(ValidationFailure):
    """One of the sequence admission rules failed; ``rule`` names it."""

    code = "sequence_rule_violation"

    def __init__(self, rule: str, detail: str = ""):
        super().__init__(detail or rule)
        self.rule = rule


class TimeSeparationRequired(TxcapError):
    """The sequence only completes when a block gap separates its members."""

    code = "time_separation_required"


class SessionExpiredTtl(TxcapError):
    code = "session_expired_ttl"


class SessionNotFound(ValidationFailure):
    code = "session_not_found"


class NotS1(TxcapError):
    """Finalize requested while the session is not in status S1."""

    code = "not_s1"


class UndefinedLabel(ValidationFailure):
    code = "undefined_label"


class SelectorCollision(ValidationFailure):
    code = "selector_collision"


class AsmSyntaxError(ValidationFailure):
    code = "asm_syntax"

    def __init__(self, line: int, detail: str):
        super().__init__(f"line {line}: {detail}")
        self.line = line


class TraceSyntaxError(ValidationFailure):
    """Trace language parse failure with position and expectation."""

    code = "trace_syntax"

    def __init__(self, line: int, col: int, expected: str):
        super().__init__(f"line {line}, col {col}: expected {expected}")
        self.line = line
        self.col = col
        self.expected = expected


class UnknownVariable(ValidationFailure):
    code = "unknown_variable"
