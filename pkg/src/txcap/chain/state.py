"""Deterministic state transitions: apply transactions, assemble blocks.

The gas model is flat (per-opcode unit cost plus a 21000 intrinsic charge);
nothing downstream depends on the mainstream gas schedule, only on price
ordering and limits.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..errors import InsufficientFunds, NonceMismatch, UnknownRecipientCode
from ..evm.disasm import validate as code_validates
from ..evm.interpreter import GasSchedule, StateView, VmContext, execute
from ..evm.trace import ExecutionTrace, Frame, OUTCOME_SUCCESS
from .types import (Account, Address, Block, CREATE, Receipt, Transaction,
                    WorldState, contract_address, digest)


@dataclass
class BlockParams:
    gas_limit: int = 30_000_000
    base_fee: int = 10**9
    block_time_quantum: int = 12
    difficulty: int = 1_000
    coinbase: Address = Address(b"\xc0" * 20)


@dataclass
class StateSnapshot:
    """Value copy of a world state; restoring yields a bit-identical state."""

    accounts: dict[Address, Account]
    head: Optional[Block]

    @classmethod
    def of(cls, state: WorldState) -> "StateSnapshot":
        return cls({a: acct.copy() for a, acct in state.accounts.items()}, state.head)


def snapshot(state: WorldState) -> StateSnapshot:
    return StateSnapshot.of(state)


def restore(snap: StateSnapshot) -> WorldState:
    return WorldState({a: acct.copy() for a, acct in snap.accounts.items()}, snap.head)


def apply_transaction(state: WorldState, tx: Transaction, block_ctx: Block, *,
                      gas_schedule: GasSchedule | None = None,
                      block_hashes: dict[int, bytes] | None = None,
                      ) -> tuple[Receipt, ExecutionTrace]:
    """Execute ``tx`` against ``state`` in the context of ``block_ctx``.

    Mutates ``state`` in place and returns the receipt and full trace. A
    reverted execution leaves every account untouched except the sender's
    nonce increment and gas deduction (plus the miner's fee credit).
    """
    gas_schedule = gas_schedule or GasSchedule()
    sender = state.account(tx.sender)
    if tx.nonce != sender.nonce:
        raise NonceMismatch(f"tx nonce {tx.nonce} != account nonce {sender.nonce}")
    max_fee = tx.gas_offer * tx.gas_price
    if sender.balance < tx.value + max_fee:
        raise InsufficientFunds(
            f"balance {sender.balance} < value {tx.value} + max fee {max_fee}")
    if not tx.is_create():
        recipient_code = state.peek(tx.recipient).code
        if recipient_code and not code_validates(recipient_code):
            raise UnknownRecipientCode(f"code at {tx.recipient.hex()} does not decode")

    # gas purchase and nonce burn survive a revert
    sender.balance -= max_fee
    sender.nonce += 1

    view = StateView(state)
    ctx = VmContext(block=block_ctx, tx_gas_price=tx.gas_price, state=view,
                    block_hashes=block_hashes or {})
    exec_gas = tx.gas_offer - gas_schedule.intrinsic
    created: Optional[Address] = None

    if exec_gas < 0:
        frame = Frame(callee=tx.recipient, caller=tx.sender, value=tx.value,
                      input=tx.calldata(), outcome="revert", error="intrinsic gas")
        receipt = Receipt(Receipt.REVERTED, tx.gas_offer, error="intrinsic gas")
        _settle(state, tx, tx.gas_offer, block_ctx)
        return receipt, frame

    if tx.is_create():
        created = contract_address(tx.sender, tx.nonce)
        result = execute(tx.args, tx.args, ctx, 0, address=created,
                         caller=tx.sender, value=tx.value, gas=exec_gas,
                         gas_schedule=gas_schedule)
        if result.ok:
            view.set_code(created, result.return_data)
            view.bump_nonce(created)
    else:
        result = execute(state.peek(tx.recipient).code, tx.calldata(), ctx, 0,
                         address=tx.recipient, caller=tx.sender, value=tx.value,
                         gas=exec_gas, gas_schedule=gas_schedule)

    gas_used = gas_schedule.intrinsic + result.gas_used
    if result.ok:
        view.commit()
        receipt = Receipt(Receipt.SUCCESS, gas_used, result.return_data,
                          contract_address=created)
    else:
        # buffered writes were already rolled back by the frame
        receipt = Receipt(Receipt.REVERTED, gas_used, result.return_data,
                          error=result.frame.error)
    _settle(state, tx, gas_used, block_ctx)
    return receipt, result.frame


def _settle(state: WorldState, tx: Transaction, gas_used: int, block_ctx: Block) -> None:
    refund = (tx.gas_offer - gas_used) * tx.gas_price
    state.account(tx.sender).balance += refund
    state.account(block_ctx.coinbase).balance += gas_used * tx.gas_price


def mine_block(state: WorldState, pool: list[Transaction], params: BlockParams, *,
               gas_schedule: GasSchedule | None = None,
               block_hashes: dict[int, bytes] | None = None,
               timestamp: Optional[int] = None,
               receipt_sink: Optional[Callable[[Transaction, Receipt, ExecutionTrace], None]] = None,
               ) -> Block:
    """Assemble and apply the next block from ``pool``.

    Transactions are taken in descending gas-price order (ties broken by
    ascending hash), transactions priced under the base fee are excluded,
    and packing stops at the gas limit. Advances ``state.head``.
    """
    parent = state.head
    number = parent.number + 1 if parent else 0
    parent_hash = parent.hash if parent else b"\x00" * 32
    ts = timestamp if timestamp is not None else (
        (parent.timestamp if parent else 0) + params.block_time_quantum)
    if parent and ts <= parent.timestamp:
        ts = parent.timestamp + params.block_time_quantum

    block = Block(number=number, parent_hash=parent_hash, gas_limit=params.gas_limit,
                  gas_used=0, difficulty=params.difficulty, timestamp=ts,
                  coinbase=params.coinbase, base_fee=params.base_fee)

    candidates = [tx for tx in pool if tx.gas_price >= params.base_fee]
    candidates.sort(key=lambda tx: (-tx.gas_price, tx.hash))
    for tx in candidates:
        if block.gas_used + tx.gas_offer > params.gas_limit:
            continue
        try:
            receipt, trace = apply_transaction(state, tx, block,
                                               gas_schedule=gas_schedule,
                                               block_hashes=block_hashes)
        except (NonceMismatch, InsufficientFunds, UnknownRecipientCode):
            continue
        tx.mark_included(number)
        block.transactions.append(tx)
        block.gas_used += receipt.gas_used
        if receipt_sink:
            receipt_sink(tx, receipt, trace)
    state.head = block
    return block


class Chain:
    """A world state plus its block history and recent-hash index."""

    def __init__(self, state: WorldState, params: BlockParams,
                 gas_schedule: GasSchedule | None = None):
        self.state = state
        self.params = params
        self.gas_schedule = gas_schedule or GasSchedule()
        self.blocks: list[Block] = [state.head] if state.head else []
        self.receipts: dict[bytes, tuple[Receipt, ExecutionTrace]] = {}

    @property
    def head(self) -> Block:
        return self.state.head

    def block_hashes(self) -> dict[int, bytes]:
        recent = self.blocks[-256:]
        return {b.number: b.hash for b in recent}

    def mine(self, pool: list[Transaction], timestamp: Optional[int] = None) -> Block:
        def sink(tx: Transaction, receipt: Receipt, trace: ExecutionTrace) -> None:
            self.receipts[tx.hash] = (receipt, trace)
        block = mine_block(self.state, pool, self.params,
                           gas_schedule=self.gas_schedule,
                           block_hashes=self.block_hashes(),
                           timestamp=timestamp, receipt_sink=sink)
        self.blocks.append(block)
        return block

    def fork(self) -> "Chain":
        """Private copy for encapsulated execution; shares nothing mutable."""
        clone = Chain(restore(snapshot(self.state)), copy.copy(self.params),
                      self.gas_schedule)
        clone.blocks = list(self.blocks)
        return clone

    def head_digest(self) -> bytes:
        return digest(self.state.digest(), self.head.hash if self.head else b"")
