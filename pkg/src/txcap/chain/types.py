"""Core chain data types: addresses, transactions, blocks, accounts, world state.

Conventions shared across the artifact:

- addresses are 20 bytes, words are 256-bit unsigned integers
- all byte fields render as lowercase ``0x``-hex in JSON
- a transaction hash covers the eight signed fields only; ``block_included``
  is mutable bookkeeping set once at inclusion time
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..errors import DomainError
from ..primitives import (Address, CREATE, ETHER, OBSERVED_POST_LONDON_FLOOR_WEI,
                          SHANNON, WORD_MAX, contract_address, digest)

__all__ = [
    "Address", "CREATE", "ETHER", "SHANNON", "WORD_MAX",
    "OBSERVED_POST_LONDON_FLOOR_WEI", "contract_address", "digest",
    "Transaction", "Block", "Account", "WorldState", "Receipt",
]


@dataclass
class Transaction:
    """One transaction: the eight signed fields plus inclusion bookkeeping.

    The sender is taken as authenticated; there is no signature machinery,
    so replay protection rests solely on nonces.
    """

    nonce: int
    gas_price: int
    gas_offer: int
    sender: Address
    recipient: Address  # CREATE marks a deployment
    value: int
    function_selector: bytes = b""  # 4 bytes or empty
    args: bytes = b""
    block_included: Optional[int] = None

    def __post_init__(self):
        if self.nonce < 0 or self.gas_price < 0 or self.value < 0:
            raise DomainError("nonce, gas_price and value must be non-negative")
        if self.gas_offer <= 0:
            raise DomainError("gas_offer must be positive")
        if self.function_selector and len(self.function_selector) != 4:
            raise DomainError("function_selector must be 4 bytes or empty")

    @property
    def hash(self) -> bytes:
        return digest(
            self.nonce.to_bytes(32, "big"),
            self.gas_price.to_bytes(32, "big"),
            self.gas_offer.to_bytes(32, "big"),
            self.sender.value,
            self.recipient.value,
            self.value.to_bytes(32, "big"),
            self.function_selector.ljust(4, b"\x00"),
            self.args,
        )

    def hash_hex(self) -> str:
        return "0x" + self.hash.hex()

    def mark_included(self, block_number: int) -> None:
        """Record the block this transaction was mined into (set exactly once)."""
        if self.block_included is not None:
            raise DomainError("block_included is already set")
        self.block_included = block_number

    def is_create(self) -> bool:
        return self.recipient == CREATE

    def calldata(self) -> bytes:
        return self.function_selector + self.args

    def to_json(self) -> dict:
        return {
            "nonce": self.nonce,
            "gas_price": self.gas_price,
            "gas_offer": self.gas_offer,
            "sender": self.sender.hex(),
            "recipient": self.recipient.hex(),
            "value": self.value,
            "function_selector": "0x" + self.function_selector.hex(),
            "args": "0x" + self.args.hex(),
            "block_included": self.block_included,
            "hash": self.hash_hex(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Transaction":
        tx = cls(
            nonce=int(obj["nonce"]),
            gas_price=int(obj["gas_price"]),
            gas_offer=int(obj["gas_offer"]),
            sender=Address.from_hex(obj["sender"]),
            recipient=Address.from_hex(obj["recipient"]),
            value=int(obj["value"]),
            function_selector=bytes.fromhex(obj.get("function_selector", "0x")[2:]),
            args=bytes.fromhex(obj.get("args", "0x")[2:]),
        )
        if obj.get("block_included") is not None:
            tx.block_included = int(obj["block_included"])
        return tx


@dataclass
class Block:
    number: int
    parent_hash: bytes
    gas_limit: int
    gas_used: int
    difficulty: int
    timestamp: int
    coinbase: Address
    base_fee: int
    transactions: list[Transaction] = field(default_factory=list)

    def __post_init__(self):
        if self.gas_used > self.gas_limit:
            raise DomainError("gas_used exceeds gas_limit")
        if self.difficulty <= 0:
            raise DomainError("difficulty must be positive")

    @property
    def hash(self) -> bytes:
        return digest(
            self.number.to_bytes(32, "big"),
            self.parent_hash,
            self.gas_limit.to_bytes(32, "big"),
            self.gas_used.to_bytes(32, "big"),
            self.difficulty.to_bytes(32, "big"),
            self.timestamp.to_bytes(32, "big"),
            self.coinbase.value,
            self.base_fee.to_bytes(32, "big"),
            *[tx.hash for tx in self.transactions],
        )

    def hash_hex(self) -> str:
        return "0x" + self.hash.hex()

    def to_json(self) -> dict:
        return {
            "number": self.number,
            "parent_hash": "0x" + self.parent_hash.hex(),
            "gas_limit": self.gas_limit,
            "gas_used": self.gas_used,
            "difficulty": self.difficulty,
            "timestamp": self.timestamp,
            "coinbase": self.coinbase.hex(),
            "base_fee": self.base_fee,
            "hash": self.hash_hex(),
            "transactions": [tx.to_json() for tx in self.transactions],
        }


@dataclass
class Account:
    """Per-address record: balance, nonce, code (empty for EOA), storage."""

    balance: int = 0
    nonce: int = 0
    code: bytes = b""
    storage: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.balance < 0:
            raise DomainError("balance never negative")
        if not self.code and self.storage:
            raise DomainError("EOA (empty code) has empty storage")

    def is_contract(self) -> bool:
        return bool(self.code)

    def copy(self) -> "Account":
        return Account(self.balance, self.nonce, self.code, dict(self.storage))


class WorldState:
    """The account map plus the current head block.

    Mutation happens only through :mod:`txcap.chain.state`; readers may hold
    snapshots, which are plain value copies safe to share across threads.
    """

    def __init__(self, accounts: Optional[dict[Address, Account]] = None,
                 head: Optional[Block] = None):
        self.accounts: dict[Address, Account] = accounts if accounts is not None else {}
        self.head = head

    def account(self, addr: Address) -> Account:
        """Fetch-or-create; absent accounts read as zeroed EOAs."""
        acct = self.accounts.get(addr)
        if acct is None:
            acct = Account()
            self.accounts[addr] = acct
        return acct

    def peek(self, addr: Address) -> Account:
        """Read-only view that does not materialize absent accounts."""
        return self.accounts.get(addr, _EMPTY_ACCOUNT)

    def balance_of(self, addr: Address) -> int:
        return self.peek(addr).balance

    def iter_accounts(self) -> Iterator[tuple[Address, Account]]:
        return iter(sorted(self.accounts.items()))

    def total_wei(self) -> int:
        return sum(a.balance for a in self.accounts.values())

    def digest(self) -> bytes:
        """Canonical digest over all account fields; equal states hash equal."""
        h = hashlib.sha256()
        for addr, acct in self.iter_accounts():
            h.update(addr.value)
            h.update(acct.balance.to_bytes(32, "big"))
            h.update(acct.nonce.to_bytes(8, "big"))
            h.update(len(acct.code).to_bytes(4, "big"))
            h.update(acct.code)
            for k in sorted(acct.storage):
                h.update(k.to_bytes(32, "big"))
                h.update(acct.storage[k].to_bytes(32, "big"))
        if self.head is not None:
            h.update(self.head.hash)
        return h.digest()


_EMPTY_ACCOUNT = Account()


@dataclass(frozen=True)
class Receipt:
    status: str  # "success" | "reverted"
    gas_used: int
    return_data: bytes = b""
    error: str = ""
    contract_address: Optional[Address] = None

    SUCCESS = "success"
    REVERTED = "reverted"

    @property
    def ok(self) -> bool:
        return self.status == self.SUCCESS

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "gas_used": self.gas_used,
            "return_data": "0x" + self.return_data.hex(),
            "error": self.error,
            "contract_address": self.contract_address.hex() if self.contract_address else None,
        }
