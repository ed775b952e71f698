"""Constant-time transaction-expiration cache.

The cache maps each contract address to bookkeeping about its most recent
incoming transaction. A test transaction's ``block_included`` is, by
convention, the first block whose effects its fork did NOT observe (fork
base + 1); a canonical transaction to the same contract at or after that
block invalidates the test.

Two modes exist because the expiration definition constrains the
interfering sender while the constant-time cache naturally forgets it:

- ``strict-52``: stores only the last incoming block (52 bytes/entry:
  20-byte address + 32-byte block). Sender-blind and conservatively
  correct - the user's own later transaction also reads as interference.
- ``sender-aware`` (default): additionally stores the last sender and the
  latest block seen from any *different* sender, which is exactly enough
  to answer the sender-constrained question precisely for every querying
  sender. Costs 104 bytes/entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from threading import Lock
from typing import Optional

from ..chain.types import Address, Transaction
from ..errors import DomainError, UnminedTransaction

EXPIRED = "expired"
UNEXPIRED = "unexpired"

MODE_STRICT = "strict-52"
MODE_SENDER_AWARE = "sender-aware"

_NO_BLOCK = (1 << 256) - 1  # serialized sentinel for "no foreign block yet"
STRICT_RECORD_BYTES = 52
SENDER_AWARE_RECORD_BYTES = 104


@dataclass(frozen=True)
class _Entry:
    """Immutable per-contract record; updates swap whole entries so a
    concurrent reader always sees a consistent snapshot."""

    last_block: int
    last_sender: Optional[Address] = None
    other_sender_block: Optional[int] = None  # latest block from a sender != last_sender


@dataclass
class ExpirationMap:
    """Contract address -> last-incoming-transaction bookkeeping.

    Entries are monotone (block numbers never decrease) and writes are
    serialized by a lock so concurrent readers never observe a torn entry.
    """

    mode: str = MODE_SENDER_AWARE
    entries: dict[Address, _Entry] = field(default_factory=dict)
    _lock: Lock = field(default_factory=Lock, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in (MODE_STRICT, MODE_SENDER_AWARE):
            raise DomainError(f"unknown txsea mode {self.mode!r}")

    def __len__(self) -> int:
        return len(self.entries)

    # -- write side ------------------------------------------------------
    def cache_transaction(self, tx: Transaction) -> None:
        """Record a mined transaction; O(1) amortized."""
        if tx.block_included is None:
            raise UnminedTransaction(tx.hash_hex())
        with self._lock:
            entry = self.entries.get(tx.recipient)
            if entry is None:
                self.entries[tx.recipient] = _Entry(
                    last_block=tx.block_included,
                    last_sender=tx.sender if self.mode == MODE_SENDER_AWARE else None,
                )
                return
            last_block = max(entry.last_block, tx.block_included)
            if self.mode == MODE_SENDER_AWARE and tx.sender != entry.last_sender:
                # the displaced latest entry becomes the best "different
                # sender" witness for the new latest sender
                new = _Entry(last_block, tx.sender, entry.last_block)
            else:
                new = _Entry(last_block, entry.last_sender,
                             entry.other_sender_block)
            self.entries[tx.recipient] = new

    # -- read side ---------------------------------------------------------
    def expiration_test(self, tx: Transaction) -> str:
        """Three-branch constant-time test: absent -> unexpired; last
        relevant block >= the test's block -> expired; else unexpired."""
        if tx.block_included is None:
            raise UnminedTransaction(tx.hash_hex())
        entry = self.entries.get(tx.recipient)
        if entry is None:
            return UNEXPIRED
        if self.mode == MODE_STRICT:
            return EXPIRED if entry.last_block >= tx.block_included else UNEXPIRED
        foreign = (entry.last_block if entry.last_sender != tx.sender
                   else entry.other_sender_block)
        if foreign is not None and foreign >= tx.block_included:
            return EXPIRED
        return UNEXPIRED

    def sequence_expiration_test(self, seq: list[Transaction],
                                 per_tx_blocks: Optional[list[int]] = None) -> str:
        """A sequence expires when any member does; since members share one
        sender and target, the earliest member's block decides."""
        if not seq:
            raise DomainError("sequence must have at least one transaction")
        blocks = per_tx_blocks or [tx.block_included for tx in seq]
        if any(b is None for b in blocks):
            raise UnminedTransaction("sequence member without a block")
        probe = _QueryView(seq[0].sender, seq[0].recipient, min(blocks))
        return self.expiration_test(probe)  # type: ignore[arg-type]

    # -- serialization -----------------------------------------------------
    def record_size(self) -> int:
        return (STRICT_RECORD_BYTES if self.mode == MODE_STRICT
                else SENDER_AWARE_RECORD_BYTES)

    def dump(self) -> bytes:
        """Fixed-width binary records, one per entry, address-sorted."""
        out = bytearray()
        with self._lock:
            for addr in sorted(self.entries):
                entry = self.entries[addr]
                out += addr.value
                out += entry.last_block.to_bytes(32, "big")
                if self.mode == MODE_SENDER_AWARE:
                    sender = entry.last_sender or Address(b"\x00" * 20)
                    out += sender.value
                    other = (_NO_BLOCK if entry.other_sender_block is None
                             else entry.other_sender_block)
                    out += other.to_bytes(32, "big")
        return bytes(out)

    @classmethod
    def load(cls, raw: bytes, mode: str = MODE_SENDER_AWARE) -> "ExpirationMap":
        emap = cls(mode=mode)
        size = emap.record_size()
        if len(raw) % size:
            raise DomainError(f"cache file is not a multiple of {size} bytes")
        for i in range(0, len(raw), size):
            rec = raw[i:i + size]
            addr = Address(rec[:20])
            last_block = int.from_bytes(rec[20:52], "big")
            if mode == MODE_STRICT:
                emap.entries[addr] = _Entry(last_block=last_block)
            else:
                sender = Address(rec[52:72])
                other = int.from_bytes(rec[72:104], "big")
                emap.entries[addr] = _Entry(
                    last_block=last_block,
                    last_sender=sender,
                    other_sender_block=None if other == _NO_BLOCK else other,
                )
        return emap


@dataclass(frozen=True)
class _QueryView:
    """Duck-typed transaction stand-in for sequence-level queries."""
    sender: Address
    recipient: Address
    block_included: int


def cache_transaction(emap: ExpirationMap, tx: Transaction) -> None:
    emap.cache_transaction(tx)


def expiration_test(emap: ExpirationMap, tx: Transaction) -> str:
    return emap.expiration_test(tx)


def sequence_expiration_test(emap: ExpirationMap, seq: list[Transaction],
                             per_tx_blocks: Optional[list[int]] = None) -> str:
    return emap.sequence_expiration_test(seq, per_tx_blocks)
