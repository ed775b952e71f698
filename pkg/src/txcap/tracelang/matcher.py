"""Structural comparison of trace documents with symbolic binding.

Golden transliterations use placeholder symbols (``A_d``, ``V_1``,
``A_b - 1 ether``) where the concrete run produces real values. Matching
walks the two documents together, requiring identical shape (entry counts,
nesting, REVERT placement, assignment names in order) while unifying
symbols against concrete values: the first occurrence binds, later
occurrences must agree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .ast import Amount, Combo, Hex, Name, Text, TraceDoc, TraceEntry, Value

#: Placeholder shape: capital letter, underscore, short subscript (A_d, V_1).
SYMBOL_RE = re.compile(r"^[A-Z]_[A-Za-z0-9]+$")


@dataclass
class MatchResult:
    ok: bool
    mismatches: list[str] = field(default_factory=list)
    bindings: dict[str, object] = field(default_factory=dict)


def _norm(value: Value):
    """Concrete normal form, or None when the value holds unbound symbols."""
    if isinstance(value, (Amount, Hex)):
        return value.normalized()
    if isinstance(value, Text):
        return ("text", value.text)
    if isinstance(value, Name):
        return None if SYMBOL_RE.match(value.text) else ("name", value.text)
    if isinstance(value, Combo):
        left, right = _norm(value.left), _norm(value.right)
        if left and right and left[0] == right[0] == "wei":
            return ("wei", left[1] + right[1] if value.op == "+" else left[1] - right[1])
        return None
    return None


class _Matcher:
    def __init__(self):
        self.env: dict[str, object] = {}
        self.mismatches: list[str] = []

    def fail(self, where: str, why: str) -> None:
        self.mismatches.append(f"{where}: {why}")

    def value(self, where: str, golden: Value, actual: Value) -> None:
        if golden == actual:
            return
        actual_n = _norm(actual)
        golden_n = _norm(golden)
        if golden_n is not None:
            if actual_n != golden_n:
                self.fail(where, f"expected {golden}, got {actual}")
            return
        if actual_n is None:
            self.fail(where, f"cannot ground {actual} against symbolic {golden}")
            return
        # golden side carries unbound symbols
        if isinstance(golden, Name):
            self.bind(where, golden.text, actual_n)
            return
        if isinstance(golden, Combo):
            self.combo(where, golden, actual_n)
            return
        self.fail(where, f"expected {golden}, got {actual}")

    def bind(self, where: str, symbol: str, concrete) -> None:
        known = self.env.get(symbol)
        if known is None:
            self.env[symbol] = concrete
        elif known != concrete:
            self.fail(where, f"{symbol} bound to {known}, now {concrete}")

    def _side(self, value: Value) -> tuple[str | None, int | None]:
        """(symbol name, wei value) for one side of a combo; either may be None."""
        if isinstance(value, Name) and SYMBOL_RE.match(value.text):
            known = self.env.get(value.text)
            wei = known[1] if isinstance(known, tuple) and known[0] == "wei" else None
            return value.text, wei
        n = _norm(value)
        return None, (n[1] if n is not None and n[0] == "wei" else None)

    def combo(self, where: str, golden: Combo, actual_n) -> None:
        """Unify ``sym +/- term`` (or two symbols) against a concrete number."""
        if actual_n[0] != "wei":
            self.fail(where, f"expected numeric value for {golden}")
            return
        target = actual_n[1]
        sign = 1 if golden.op == "+" else -1
        left_sym, left_v = self._side(golden.left)
        right_sym, right_v = self._side(golden.right)
        if left_v is not None and right_v is not None:
            if left_v + sign * right_v != target:
                self.fail(where, f"{golden} = {left_v} {golden.op} {right_v} != {target}")
        elif left_v is None and right_v is not None and left_sym:
            self.bind(where, left_sym, ("wei", target - sign * right_v))
        elif right_v is None and left_v is not None and right_sym:
            self.bind(where, right_sym, ("wei", sign * (target - left_v)))
        else:
            self.fail(where, f"cannot solve {golden} against {target}")

    def entry(self, where: str, golden: TraceEntry, actual: TraceEntry) -> None:
        if (golden.contract, golden.function) != (actual.contract, actual.function):
            self.fail(where, f"expected {golden.contract}.{golden.function}, "
                             f"got {actual.contract}.{actual.function}")
            return
        if golden.reverted != actual.reverted:
            self.fail(where, "REVERT placement differs")
        self.assigns(f"{where} pre", golden.pre, actual.pre)
        if not golden.reverted and not actual.reverted:
            self.assigns(f"{where} post", golden.post or [], actual.post or [])
        if len(golden.children) != len(actual.children):
            self.fail(where, f"expected {len(golden.children)} nested calls, "
                             f"got {len(actual.children)}")
            return
        for i, (g, a) in enumerate(zip(golden.children, actual.children)):
            self.entry(f"{where}.{i + 1}", g, a)

    def assigns(self, where: str, golden_list, actual_list) -> None:
        if len(golden_list) != len(actual_list):
            self.fail(where, f"expected {len(golden_list)} assignments, "
                             f"got {len(actual_list)}")
            return
        for g, a in zip(golden_list, actual_list):
            if g.lhs != a.lhs:
                self.fail(where, f"expected {g.lhs}, got {a.lhs}")
                continue
            self.value(f"{where} {g.lhs}", g.rhs, a.rhs)


def match_docs(golden: TraceDoc, actual: TraceDoc) -> MatchResult:
    m = _Matcher()
    if len(golden.entries) != len(actual.entries):
        m.fail("doc", f"expected {len(golden.entries)} entries, "
                      f"got {len(actual.entries)}")
    else:
        for i, (g, a) in enumerate(zip(golden.entries, actual.entries)):
            m.entry(f"entry {i + 1}", g, a)
    return MatchResult(ok=not m.mismatches, mismatches=m.mismatches, bindings=m.env)
