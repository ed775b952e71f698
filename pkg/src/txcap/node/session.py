"""Test-session lifecycle on the instrumented node.

A session is a soft fork: a private snapshot of the canonical chain on
which underpriced test transactions execute one per fork block. Nothing a
session does ever reaches the canonical chain; the canonical chain reaches
the session only through the expiration map, which may flip a session from
"still valid" (S1) to "expired, retest" (S2).

Statuses:

- S1: every trace sigma-deterministic and the sequence unexpired
- S2: sigma-deterministic but expired (monotone: S1 may only move to S2)
- S3: sigma-nondeterministic with vulnerability markers (absorbing)
- S4: sigma-nondeterministic, no markers - untestable (absorbing)
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .. import sigma
from ..asm.compiler import CompiledContract
from ..chain.state import Chain, StateSnapshot, apply_transaction, restore, snapshot
from ..chain.types import Address, Block, Receipt, Transaction, WorldState
from ..errors import (NodeSyncing, NotS1, NotUnderpriced, SequenceRuleViolation,
                      SessionExpiredTtl, SessionNotFound, TimeSeparationRequired)
from ..evm.trace import Frame, flatten_trace
from ..gossip.network import PropagationReport, SimNetwork
from ..txsea.cache import EXPIRED, ExpirationMap

S1, S2, S3, S4 = "S1", "S2", "S3", "S4"

DEFAULT_TTL_BLOCKS = 64
#: Gaps (in blocks) probed when a reverting member might be time-guarded.
TIME_GAP_PROBES = (1, 2, 4, 8, 16)
#: Block-attribute opcodes whose presence makes a revert potentially
#: schedule-dependent; only such traces are worth probing.
_TIME_SENSITIVE = {"NUMBER", "TIMESTAMP", "BLOCKHASH", "DIFFICULTY"}

OK = "ok"
TIME_SEPARATION_REQUIRED = "time-separation-required"

REPLICABLE = "replicable"
NOT_REPLICABLE = "not-replicable"


@dataclass
class ExecutedTest:
    tx: Transaction
    receipt: Receipt
    trace: Frame
    classification: sigma.Classification
    fork_block: int
    pre_state: StateSnapshot
    post_state: StateSnapshot


@dataclass
class TestSession:
    id: str
    fork: Chain
    fork_base: StateSnapshot
    fork_base_block: int
    created_at: int
    ttl_blocks: int
    executed: list[ExecutedTest] = field(default_factory=list)
    sticky_expired: bool = False
    status: str = S1

    def sequence(self) -> list[Transaction]:
        return [e.tx for e in self.executed]

    def classification(self) -> Optional[sigma.Classification]:
        if not self.executed:
            return None
        return sigma.classify_sequence([e.trace for e in self.executed])


@dataclass(frozen=True)
class ReplicabilityVerdict:
    verdict: str  # replicable | not-replicable
    reason: str = ""  # field-mismatch:<field> | sigma-nondeterministic | expired-at:<block>
    detail: str = ""

    @property
    def replicable(self) -> bool:
        return self.verdict == REPLICABLE

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "reason": self.reason, "detail": self.detail}


def clone_tx(tx: Transaction, *, gas_price: Optional[int] = None,
             **overrides) -> Transaction:
    fields = dict(nonce=tx.nonce, gas_price=tx.gas_price, gas_offer=tx.gas_offer,
                  sender=tx.sender, recipient=tx.recipient, value=tx.value,
                  function_selector=tx.function_selector, args=tx.args)
    if gas_price is not None:
        fields["gas_price"] = gas_price
    fields.update(overrides)
    return Transaction(**fields)


class TxtNode:
    """The instrumented node: canonical replica, expiration map, sessions."""

    def __init__(self, network: SimNetwork, *, node_id: Optional[int] = None,
                 ttl_blocks: int = DEFAULT_TTL_BLOCKS,
                 txsea_mode: str = "sender-aware"):
        instrumented = network.instrumented_ids()
        if node_id is None:
            if not instrumented:
                raise NodeSyncing("network has no instrumented node")
            node_id = instrumented[0]
        self.network = network
        self.node = network.nodes[node_id]
        self.chain = self.node.chain
        self.ttl_blocks = ttl_blocks
        self.expiration_map = ExpirationMap(mode=txsea_mode)
        self.sessions: dict[str, TestSession] = {}
        self.registry: dict[Address, CompiledContract] = {}
        self.symbols: dict[Address, str] = {}
        self.on_status_change: list[Callable[[str, str, str], None]] = []
        self._cached_height = -1
        self.sync()

    # -- canonical bookkeeping ----------------------------------------------
    def sync(self) -> None:
        """Cache every canonical transaction mined since the last sync."""
        for block in self.chain.blocks:
            if block.number <= self._cached_height:
                continue
            for tx in block.transactions:
                self.expiration_map.cache_transaction(tx)
            self._cached_height = block.number
        self._refresh_statuses()

    def network_floor(self) -> int:
        """Highest price still guaranteed not to propagate or mine."""
        honest = [n.policy.min_gas_price for n in self.network.nodes.values()
                  if not n.policy.is_instrumented]
        floors = honest + [self.chain.params.base_fee]
        return min(floors) if floors else self.chain.params.base_fee

    def market_gas_price(self) -> int:
        """A price every honest node pools and every miner accepts."""
        honest = [n.policy.min_gas_price for n in self.network.nodes.values()
                  if not n.policy.is_instrumented]
        return max(honest + [self.chain.params.base_fee])

    def register_contract(self, addr: Address, compiled: CompiledContract,
                          symbol: Optional[str] = None) -> None:
        self.registry[addr] = compiled
        if symbol:
            self.symbols[addr] = symbol

    # -- session lifecycle ---------------------------------------------------
    def open_session(self) -> TestSession:
        if not self.network.quiescent:
            raise NodeSyncing("gossip events still in flight")
        self.sync()
        fork = self.chain.fork()
        # the soft fork admits any price: that is the instrumented override
        fork.params = replace(fork.params, base_fee=0)
        session = TestSession(
            id=uuid.uuid4().hex[:16],
            fork=fork,
            fork_base=snapshot(self.chain.state),
            fork_base_block=self.chain.head.number,
            created_at=self.chain.head.number,
            ttl_blocks=self.ttl_blocks,
        )
        self.sessions[session.id] = session
        return session

    def _get(self, session_id: str) -> TestSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise SessionNotFound(session_id)
        if self.chain.head.number - session.created_at > session.ttl_blocks:
            # reclaim the snapshot; the session is gone
            del self.sessions[session_id]
            raise SessionExpiredTtl(session_id)
        return session

    # -- the test path ---------------------------------------------------------
    def submit_test(self, session_id: str, tx: Transaction) -> ExecutedTest:
        self.sync()
        session = self._get(session_id)
        if tx.gas_price >= self.network_floor():
            raise NotUnderpriced(
                f"gas_price {tx.gas_price} >= network floor {self.network_floor()}; "
                "the test would propagate")
        self._check_sequence_rules(session, tx)

        pre = snapshot(session.fork.state)
        block = session.fork.mine([tx])
        if tx.hash not in session.fork.receipts:
            # mine_block skipped it; re-raise the underlying validation error
            session.fork.state = restore(pre)
            session.fork.blocks.pop()
            apply_transaction(restore(pre), tx, block)  # raises with detail
            raise SequenceRuleViolation("validity", "transaction not applicable")
        receipt, trace = session.fork.receipts[tx.hash]

        if not receipt.ok and self._probe_time_separation(pre, tx, trace):
            # reject: per the separation rule this sequence cannot be tested
            session.fork.state = restore(pre)
            session.fork.blocks.pop()
            session.fork.receipts.pop(tx.hash, None)
            tx.block_included = None
            raise TimeSeparationRequired(
                "member succeeds only when a block gap precedes it")

        executed = ExecutedTest(
            tx=tx, receipt=receipt, trace=trace,
            classification=sigma.classify_transaction(trace),
            fork_block=block.number,
            pre_state=pre, post_state=snapshot(session.fork.state),
        )
        session.executed.append(executed)
        self._recompute_status(session)
        return executed

    def _check_sequence_rules(self, session: TestSession, tx: Transaction) -> None:
        if tx.is_create():
            raise SequenceRuleViolation("no_deployment",
                                        "deployments are not testable in a session")
        if session.executed:
            first = session.executed[0].tx
            last = session.executed[-1].tx
            if tx.sender != first.sender:
                raise SequenceRuleViolation("same_origin",
                                            "sequence members share one sender")
            if tx.recipient != first.recipient:
                raise SequenceRuleViolation("same_target",
                                            "sequence members share one contract")
            if tx.nonce != last.nonce + 1:
                raise SequenceRuleViolation(
                    "ascending_nonces",
                    f"expected nonce {last.nonce + 1}, got {tx.nonce}")
        else:
            expected = session.fork.state.peek(tx.sender).nonce
            if tx.nonce != expected:
                raise SequenceRuleViolation(
                    "no_interleaving",
                    f"first member must continue the account nonce {expected}")

    def _probe_time_separation(self, pre: StateSnapshot, tx: Transaction,
                               trace: Frame) -> bool:
        touched = {op.mnemonic for op in flatten_trace(trace)}
        if not touched & _TIME_SENSITIVE:
            return False  # nothing block-dependent; the revert is genuine
        for gap in TIME_GAP_PROBES:
            scratch = Chain(restore(pre), replace(self.chain.params, base_fee=0),
                            self.chain.gas_schedule)
            scratch.blocks = list(self.chain.blocks)
            for _ in range(gap):
                scratch.mine([])
            probe = clone_tx(tx)
            scratch.mine([probe])
            result = scratch.receipts.get(probe.hash)
            if result and result[0].ok:
                return True
        return False

    def check_time_separation(self, txs: list[Transaction],
                              base: Optional[StateSnapshot] = None) -> str:
        """Dry-run a planned sequence: same fork block vs gapped schedules."""
        base = base or snapshot(self.chain.state)
        same_block = self._run_schedule(base, txs, gap=0)
        if all(r.ok for r in same_block):
            return OK
        for gap in TIME_GAP_PROBES:
            if all(r.ok for r in self._run_schedule(base, txs, gap)):
                return TIME_SEPARATION_REQUIRED
        return OK

    def _run_schedule(self, base: StateSnapshot, txs: list[Transaction],
                      gap: int) -> list[Receipt]:
        scratch = Chain(restore(base), replace(self.chain.params, base_fee=0),
                        self.chain.gas_schedule)
        scratch.blocks = list(self.chain.blocks)
        receipts: list[Receipt] = []
        if gap == 0:
            scratch.mine([])  # one shared fork block for the whole sequence
            block = scratch.head
            for tx in txs:
                probe = clone_tx(tx)
                try:
                    receipt, _trace = apply_transaction(
                        scratch.state, probe, block,
                        gas_schedule=scratch.gas_schedule,
                        block_hashes=scratch.block_hashes())
                except Exception:
                    receipt = Receipt(Receipt.REVERTED, 0, error="inapplicable")
                receipts.append(receipt)
            return receipts
        for i, tx in enumerate(txs):
            if i:
                for _ in range(gap):
                    scratch.mine([])
            probe = clone_tx(tx)
            scratch.mine([probe])
            result = scratch.receipts.get(probe.hash)
            receipts.append(result[0] if result
                            else Receipt(Receipt.REVERTED, 0, error="inapplicable"))
        return receipts

    # -- status ------------------------------------------------------------
    def _recompute_status(self, session: TestSession) -> str:
        old = session.status
        cls = session.classification()
        if cls is None:
            session.status = S1  # provisional, nothing executed yet
        elif not cls.deterministic:
            session.status = S3 if cls.markers else S4
        else:
            if not session.sticky_expired:
                verdict = self.expiration_map.sequence_expiration_test(
                    session.sequence())
                if verdict == EXPIRED:
                    session.sticky_expired = True
            session.status = S2 if session.sticky_expired else S1
        if session.status != old:
            for hook in self.on_status_change:
                hook(session.id, old, session.status)
        return session.status

    def _refresh_statuses(self) -> None:
        for session in list(self.sessions.values()):
            if session.executed:
                self._recompute_status(session)

    def poll_status(self, session_id: str) -> dict:
        self.sync()
        session = self._get(session_id)
        status = self._recompute_status(session)
        cls = session.classification()
        expiration = {
            "expired": session.sticky_expired,
            "checked_at_block": self.chain.head.number,
        }
        entry = self.expiration_map.entries.get(
            session.executed[0].tx.recipient) if session.executed else None
        if entry is not None:
            expiration["last_incoming_block"] = entry.last_block
        return {
            "session": session_id,
            "status": status,
            "classification": cls.to_json() if cls else None,
            "expiration": expiration,
            "fork_base_block": session.fork_base_block,
            "ttl_blocks_left": session.ttl_blocks - (self.chain.head.number
                                                     - session.created_at),
            "receipts": [e.receipt.to_json() for e in session.executed],
        }

    # -- replicability and finalize -----------------------------------------
    def verify_replicability(self, session_id: str,
                             final_txs: list[Transaction]) -> ReplicabilityVerdict:
        """Check the replay guarantee: field equality (gas price exempt),
        sigma-determinism of the tested traces, and no expiration."""
        self.sync()
        session = self._get(session_id)
        tested = session.sequence()
        if not tested:
            return ReplicabilityVerdict(NOT_REPLICABLE, "field-mismatch:length",
                                        "session has no tested transactions")
        if len(final_txs) != len(tested):
            return ReplicabilityVerdict(NOT_REPLICABLE, "field-mismatch:length",
                                        f"{len(final_txs)} != {len(tested)}")
        for i, (final, test) in enumerate(zip(final_txs, tested)):
            for fname in ("nonce", "gas_offer", "sender", "recipient", "value",
                          "function_selector", "args"):
                if getattr(final, fname) != getattr(test, fname):
                    return ReplicabilityVerdict(
                        NOT_REPLICABLE, f"field-mismatch:{fname}",
                        f"sequence member {i}")
        cls = session.classification()
        if cls is not None and not cls.deterministic:
            return ReplicabilityVerdict(
                NOT_REPLICABLE, "sigma-nondeterministic",
                ", ".join(sorted(s.opcode for s in cls.sources)))
        verdict = self.expiration_map.sequence_expiration_test(tested)
        if verdict == EXPIRED:
            entry = self.expiration_map.entries.get(tested[0].recipient)
            at = entry.last_block if entry else self.chain.head.number
            return ReplicabilityVerdict(NOT_REPLICABLE, f"expired-at:{at}",
                                        "interfering canonical transaction")
        return ReplicabilityVerdict(REPLICABLE)

    def finalize(self, session_id: str, tx_index: int,
                 gas_price: Optional[int] = None,
                 ) -> tuple[Transaction, PropagationReport]:
        """Resubmit one tested transaction canonically at a market price.

        The session itself is left untouched; the final goes out through
        gossip like any ordinary transaction.
        """
        self.sync()
        session = self._get(session_id)
        if self._recompute_status(session) != S1:
            raise NotS1(f"session status is {session.status}")
        if not 0 <= tx_index < len(session.executed):
            raise SessionNotFound(f"tx index {tx_index} out of range")
        tested = session.executed[tx_index].tx
        final = clone_tx(tested, gas_price=gas_price or self.market_gas_price())
        report = self.network.broadcast(self.node.node_id, final)
        return final, report
