"""Tree model for the human-readable execution trace language (``.trc``).

A document is a list of entries; each entry names ``Contract.function``,
carries a parenthesized pre-condition assignment list, optional nested
entries for inter-contract calls, and a bracketed post: either an
assignment list or the single keyword REVERT (never both).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..chain.types import ETHER, SHANNON


@dataclass(frozen=True)
class Amount:
    """Numeric literal with an optional unit word.

    Known units (wei, shannon/gwei, ether) normalize to wei; anything else
    (say, a token symbol) is kept verbatim and compared textually.
    """

    magnitude: int
    unit: str = ""

    _WEI_PER = {"": 1, "wei": 1, "shannon": SHANNON, "gwei": SHANNON, "ether": ETHER}

    def normalized(self) -> tuple[str, object]:
        factor = self._WEI_PER.get(self.unit.lower())
        if factor is not None:
            return ("wei", self.magnitude * factor)
        return ("unit:" + self.unit, self.magnitude)

    def __str__(self) -> str:
        return f"{self.magnitude} {self.unit}" if self.unit else str(self.magnitude)


@dataclass(frozen=True)
class Hex:
    """Hex literal, text-preserving (addresses, hashes)."""

    text: str

    def normalized(self) -> tuple[str, object]:
        return ("wei", int(self.text, 16))

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Name:
    """Identifier path, possibly with one parenthesized argument:
    ``owner``, ``msg.sender.balance``, ``balanceOf(A_d)``."""

    text: str

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Text:
    """Quoted string literal."""

    text: str

    def __str__(self) -> str:
        escaped = self.text.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


@dataclass(frozen=True)
class Combo:
    """Additive expression over values, e.g. ``A_b - 1 ether``."""

    left: "Value"
    op: str  # '+' | '-'
    right: "Value"

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


Value = Union[Amount, Hex, Name, Text, Combo]


@dataclass(frozen=True)
class Assignment:
    lhs: Name
    rhs: Value

    def __str__(self) -> str:
        return f"{self.lhs}={self.rhs}"


@dataclass
class TraceEntry:
    index: int
    contract: str
    function: str
    pre: list[Assignment] = field(default_factory=list)
    children: list["TraceEntry"] = field(default_factory=list)
    post: Optional[list[Assignment]] = None  # None means REVERT

    @property
    def reverted(self) -> bool:
        return self.post is None

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class TraceDoc:
    entries: list[TraceEntry] = field(default_factory=list)

    def walk(self):
        for entry in self.entries:
            yield from entry.walk()

    def revert_count(self) -> int:
        return sum(1 for e in self.walk() if e.reverted)


def value_to_json(value: Value) -> dict:
    if isinstance(value, Amount):
        return {"amount": [value.magnitude, value.unit]}
    if isinstance(value, Hex):
        return {"hex": value.text}
    if isinstance(value, Name):
        return {"name": value.text}
    if isinstance(value, Text):
        return {"text": value.text}
    return {"combo": [value_to_json(value.left), value.op,
                      value_to_json(value.right)]}


def value_from_json(obj: dict) -> Value:
    if "amount" in obj:
        mag, unit = obj["amount"]
        return Amount(int(mag), unit)
    if "hex" in obj:
        return Hex(obj["hex"])
    if "name" in obj:
        return Name(obj["name"])
    if "text" in obj:
        return Text(obj["text"])
    left, op, right = obj["combo"]
    return Combo(value_from_json(left), op, value_from_json(right))


def _entry_to_json(entry: TraceEntry) -> dict:
    return {
        "index": entry.index,
        "contract": entry.contract,
        "function": entry.function,
        "pre": [[a.lhs.text, value_to_json(a.rhs)] for a in entry.pre],
        "children": [_entry_to_json(c) for c in entry.children],
        "post": None if entry.post is None
        else [[a.lhs.text, value_to_json(a.rhs)] for a in entry.post],
    }


def _entry_from_json(obj: dict) -> TraceEntry:
    return TraceEntry(
        index=int(obj["index"]),
        contract=obj["contract"],
        function=obj["function"],
        pre=[Assignment(Name(lhs), value_from_json(rhs)) for lhs, rhs in obj["pre"]],
        children=[_entry_from_json(c) for c in obj["children"]],
        post=None if obj["post"] is None
        else [Assignment(Name(lhs), value_from_json(rhs)) for lhs, rhs in obj["post"]],
    )


def doc_to_json(doc: TraceDoc) -> dict:
    return {"entries": [_entry_to_json(e) for e in doc.entries]}


def doc_from_json(obj: dict) -> TraceDoc:
    return TraceDoc([_entry_from_json(e) for e in obj["entries"]])
