"""Leaf value types shared by the chain and the interpreter.

Conventions: addresses are 20 bytes, words are 256-bit unsigned integers,
and every byte field renders as lowercase ``0x``-hex.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import total_ordering

from .errors import DomainError

WORD_MAX = 2**256 - 1
ETHER = 10**18
SHANNON = 10**9  # 1 Shannon = 10^9 wei (gigawei)

#: Lowest gas price ever accepted on the public chain after the London fork;
#: shipped as a reference constant for docs and example configs.
OBSERVED_POST_LONDON_FLOOR_WEI = 1_423_420_054


@total_ordering
@dataclass(frozen=True)
class Address:
    """A 20-byte account identifier, hex-renderable and totally ordered."""

    value: bytes

    def __post_init__(self):
        if not isinstance(self.value, bytes) or len(self.value) != 20:
            raise DomainError("address must be exactly 20 bytes")

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        raw = text[2:] if text.startswith(("0x", "0X")) else text
        if len(raw) != 40:
            raise DomainError(f"address hex must be 40 nibbles, got {len(raw)}")
        return cls(bytes.fromhex(raw))

    @classmethod
    def from_int(cls, n: int) -> "Address":
        return cls(int(n).to_bytes(20, "big"))

    def to_int(self) -> int:
        return int.from_bytes(self.value, "big")

    def hex(self) -> str:
        return "0x" + self.value.hex()

    def __lt__(self, other: "Address") -> bool:
        return self.value < other.value

    def __str__(self) -> str:
        return self.hex()

    def __repr__(self) -> str:
        return f"Address({self.hex()})"


#: Pseudo-recipient marking a deployment transaction (no real account).
CREATE = Address(b"\x00" * 20)


def digest(*chunks: bytes) -> bytes:
    """32-byte digest used for transaction/block hashes and selectors."""
    h = hashlib.sha256()
    for c in chunks:
        h.update(c)
    return h.digest()


def contract_address(sender: Address, nonce: int) -> Address:
    """Deterministic address for a contract created by (sender, nonce)."""
    return Address(digest(sender.value, nonce.to_bytes(8, "big"))[12:])
