"""Execution traces: the recursive per-call opcode record of one transaction.

A trace is a tree of frames; flattening it yields the full opcode sequence
with every inter-contract call's opcodes spliced in right after the CALL
that entered it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..primitives import Address

OUTCOME_SUCCESS = "success"
OUTCOME_REVERT = "revert"


@dataclass(frozen=True)
class TraceOp:
    mnemonic: str
    operand: Optional[int] = None  # PUSHn immediate, if any

    def __str__(self) -> str:
        if self.operand is None:
            return self.mnemonic
        return f"{self.mnemonic} 0x{self.operand:x}"


@dataclass
class Frame:
    """One call frame: who ran, what it executed, and how it ended."""

    callee: Address
    caller: Address
    value: int
    input: bytes
    opcodes: list[TraceOp] = field(default_factory=list)
    children: list[tuple[int, "Frame"]] = field(default_factory=list)  # (opcode index, frame)
    outcome: str = OUTCOME_SUCCESS
    error: str = ""

    @property
    def reverted(self) -> bool:
        return self.outcome == OUTCOME_REVERT

    def selector(self) -> bytes:
        return self.input[:4] if len(self.input) >= 4 else b""

    def walk(self) -> Iterator["Frame"]:
        """Depth-first iteration over this frame and all descendants."""
        yield self
        for _, child in self.children:
            yield from child.walk()

    def to_json(self) -> dict:
        return {
            "callee": self.callee.hex(),
            "caller": self.caller.hex(),
            "value": self.value,
            "input": "0x" + self.input.hex(),
            "outcome": self.outcome,
            "error": self.error,
            "opcodes": [[op.mnemonic, op.operand] for op in self.opcodes],
            "children": [[idx, child.to_json()] for idx, child in self.children],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Frame":
        frame = cls(
            callee=Address.from_hex(obj["callee"]),
            caller=Address.from_hex(obj["caller"]),
            value=int(obj["value"]),
            input=bytes.fromhex(obj["input"][2:]),
            outcome=obj["outcome"],
            error=obj.get("error", ""),
        )
        frame.opcodes = [TraceOp(m, o) for m, o in obj["opcodes"]]
        frame.children = [(int(i), cls.from_json(c)) for i, c in obj["children"]]
        return frame


#: An execution trace is simply its root frame.
ExecutionTrace = Frame


def flatten_trace(trace: Frame) -> list[TraceOp]:
    """Depth-first opcode sequence; child opcodes follow their CALL opcode."""
    out: list[TraceOp] = []
    child_at: dict[int, list[Frame]] = {}
    for idx, child in sorted(trace.children, key=lambda pair: pair[0]):
        child_at.setdefault(idx, []).append(child)
    for i, op in enumerate(trace.opcodes):
        out.append(op)
        for child in child_at.get(i, ()):
            out.extend(flatten_trace(child))
    return out


def mnemonics(trace: Frame) -> list[str]:
    return [op.mnemonic for op in flatten_trace(trace)]
