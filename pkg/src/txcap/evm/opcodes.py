"""Static opcode table for the miniature stack interpreter.

Byte values mirror the mainstream VM encoding so disassembly listings look
familiar; only the curated subset below exists. Every mnemonic declares a
fixed stack arity (pops, pushes) used both by the interpreter and by the
disassembler's validation pass.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class OpInfo:
    mnemonic: str
    byte: int
    pops: int
    pushes: int
    immediate: int = 0  # trailing operand bytes (PUSHn only)


def _table() -> dict[str, OpInfo]:
    ops = [
        # control
        ("STOP", 0x00, 0, 0),
        # arithmetic / logic
        ("ADD", 0x01, 2, 1),
        ("MUL", 0x02, 2, 1),
        ("SUB", 0x03, 2, 1),
        ("DIV", 0x04, 2, 1),
        ("LT", 0x10, 2, 1),
        ("GT", 0x11, 2, 1),
        ("EQ", 0x14, 2, 1),
        ("ISZERO", 0x15, 1, 1),
        ("AND", 0x16, 2, 1),
        ("OR", 0x17, 2, 1),
        ("NOT", 0x19, 1, 1),
        # environment
        ("ADDRESS", 0x30, 0, 1),
        ("BALANCE", 0x31, 1, 1),
        ("CALLER", 0x33, 0, 1),
        ("CALLVALUE", 0x34, 0, 1),
        ("CALLDATALOAD", 0x35, 1, 1),
        ("CALLDATASIZE", 0x36, 0, 1),
        ("GASPRICE", 0x3A, 0, 1),
        # block attributes
        ("BLOCKHASH", 0x40, 1, 1),
        ("COINBASE", 0x41, 0, 1),
        ("TIMESTAMP", 0x42, 0, 1),
        ("NUMBER", 0x43, 0, 1),
        ("DIFFICULTY", 0x44, 0, 1),
        ("GASLIMIT", 0x45, 0, 1),
        ("SELFBALANCE", 0x47, 0, 1),
        # stack / memory / storage
        ("POP", 0x50, 1, 0),
        ("MLOAD", 0x51, 1, 1),
        ("MSTORE", 0x52, 2, 0),
        ("SLOAD", 0x54, 1, 1),
        ("SSTORE", 0x55, 2, 0),
        ("JUMP", 0x56, 1, 0),
        ("JUMPI", 0x57, 2, 0),
        ("JUMPDEST", 0x5B, 0, 0),
        # logging & calls
        ("LOG0", 0xA0, 2, 0),
        ("CALL", 0xF1, 7, 1),
        ("RETURN", 0xF3, 2, 0),
        ("STATICCALL", 0xFA, 6, 1),
        ("REVERT", 0xFD, 2, 0),
        ("SELFDESTRUCT", 0xFF, 1, 0),
    ]
    table = {m: OpInfo(m, b, pops, pushes) for m, b, pops, pushes in ops}
    for n in range(1, 33):
        table[f"PUSH{n}"] = OpInfo(f"PUSH{n}", 0x60 + n - 1, 0, 1, immediate=n)
    for n in range(1, 17):
        table[f"DUP{n}"] = OpInfo(f"DUP{n}", 0x80 + n - 1, n, n + 1)
        table[f"SWAP{n}"] = OpInfo(f"SWAP{n}", 0x90 + n - 1, n + 1, n + 1)
    return table


OPCODES: dict[str, OpInfo] = _table()
BY_BYTE: dict[int, OpInfo] = {info.byte: info for info in OPCODES.values()}

#: Opcodes whose result depends on chain attributes rather than prior
#: transactions; their presence in an execution stack voids replay guarantees.
STATE_PROBE_OPCODES: frozenset[str] = frozenset(
    {"BLOCKHASH", "NUMBER", "COINBASE", "GASLIMIT",
     "DIFFICULTY", "TIMESTAMP", "GASPRICE", "BALANCE"}
)


def is_push(mnemonic: str) -> bool:
    return mnemonic.startswith("PUSH")


def push_for(value: int) -> tuple[str, int]:
    """Smallest PUSHn fitting ``value``; returns (mnemonic, width)."""
    width = max(1, (value.bit_length() + 7) // 8)
    if width > 32:
        raise ValueError("push value exceeds 32 bytes")
    return f"PUSH{width}", width
