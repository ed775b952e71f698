"""Genesis files: JSON documents seeding accounts and chain parameters."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import DomainError
from .state import BlockParams, Chain
from .types import Account, Address, Block, WorldState

_PARAM_KEYS = {"gas_limit", "base_fee", "block_time_quantum", "difficulty", "coinbase"}


def params_from_json(obj: dict) -> BlockParams:
    unknown = set(obj) - _PARAM_KEYS
    if unknown:
        raise DomainError(f"unknown chain params: {sorted(unknown)}")
    params = BlockParams()
    if "gas_limit" in obj:
        params.gas_limit = int(obj["gas_limit"])
    if "base_fee" in obj:
        params.base_fee = int(obj["base_fee"])
    if "block_time_quantum" in obj:
        params.block_time_quantum = int(obj["block_time_quantum"])
    if "difficulty" in obj:
        params.difficulty = int(obj["difficulty"])
    if "coinbase" in obj:
        params.coinbase = Address.from_hex(obj["coinbase"])
    return params


def genesis_chain(doc: dict) -> Chain:
    """Build a chain at block 0 from a genesis document."""
    params = params_from_json(doc.get("params", {}))
    state = WorldState()
    for entry in doc.get("accounts", []):
        addr = Address.from_hex(entry["address"])
        code = bytes.fromhex(entry.get("code", "0x")[2:])
        storage = {int(k, 0): int(v, 0) for k, v in entry.get("storage", {}).items()}
        state.accounts[addr] = Account(
            balance=int(entry.get("balance", 0)),
            nonce=int(entry.get("nonce", 0)),
            code=code,
            storage=storage,
        )
    state.head = Block(number=0, parent_hash=b"\x00" * 32, gas_limit=params.gas_limit,
                       gas_used=0, difficulty=params.difficulty, timestamp=0,
                       coinbase=params.coinbase, base_fee=params.base_fee)
    return Chain(state, params)


def load_genesis(path: str | Path) -> Chain:
    return genesis_chain(json.loads(Path(path).read_text()))


def dump_state(state: WorldState) -> dict:
    """Canonical JSON export with lowercase 0x-hex byte fields."""
    accounts = []
    for addr, acct in state.iter_accounts():
        accounts.append({
            "address": addr.hex(),
            "balance": acct.balance,
            "nonce": acct.nonce,
            "code": "0x" + acct.code.hex(),
            "storage": {f"0x{k:064x}": f"0x{v:064x}"
                        for k, v in sorted(acct.storage.items())},
        })
    return {"accounts": accounts,
            "head": state.head.to_json() if state.head else None}
