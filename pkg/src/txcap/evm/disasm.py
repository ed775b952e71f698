"""Disassembler / reassembler for raw bytecode.

The listing format is one opcode per line, ``PC: MNEMONIC [0xIMMEDIATE]``,
and reassembling a listing yields byte-identical code.
"""

from __future__ import annotations

from ..errors import ValidationFailure
from .opcodes import BY_BYTE, OPCODES


class CodeDecodeError(ValidationFailure):
    code = "code_decode"


def decode(code: bytes) -> list[tuple[int, str, int | None]]:
    """Decode to (pc, mnemonic, immediate) triples; raises on undecodable code."""
    out = []
    pc = 0
    while pc < len(code):
        info = BY_BYTE.get(code[pc])
        if info is None:
            raise CodeDecodeError(f"unknown opcode byte 0x{code[pc]:02x} at pc {pc}")
        imm = None
        if info.immediate:
            raw = code[pc + 1: pc + 1 + info.immediate]
            if len(raw) < info.immediate:
                raise CodeDecodeError(f"truncated {info.mnemonic} at pc {pc}")
            imm = int.from_bytes(raw, "big")
        out.append((pc, info.mnemonic, imm))
        pc += 1 + info.immediate
    return out


def validate(code: bytes) -> bool:
    try:
        decode(code)
        return True
    except CodeDecodeError:
        return False


def disassemble(code: bytes) -> str:
    lines = []
    for pc, mnemonic, imm in decode(code):
        if imm is None:
            lines.append(f"{pc:05d}: {mnemonic}")
        else:
            width = OPCODES[mnemonic].immediate * 2
            lines.append(f"{pc:05d}: {mnemonic} 0x{imm:0{width}x}")
    return "\n".join(lines)


def assemble(listing: str) -> bytes:
    """Inverse of :func:`disassemble`; PC prefixes are optional."""
    out = bytearray()
    for raw in listing.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            line = line.split(":", 1)[1].strip()
        parts = line.split()
        mnemonic = parts[0].upper()
        info = OPCODES.get(mnemonic)
        if info is None:
            raise CodeDecodeError(f"unknown mnemonic {mnemonic!r}")
        out.append(info.byte)
        if info.immediate:
            if len(parts) != 2:
                raise CodeDecodeError(f"{mnemonic} needs an immediate")
            value = int(parts[1], 0)
            out.extend(value.to_bytes(info.immediate, "big"))
        elif len(parts) != 1:
            raise CodeDecodeError(f"{mnemonic} takes no immediate")
    return bytes(out)
