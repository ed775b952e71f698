"""Discrete-event gossip network demonstrating underpricing isolation.

Nodes flood transactions and blocks along the topology with per-node
dedup. A node admits a transaction to its pool only when the gas price
meets its floor, and refuses to forward what it rejects; the instrumented
node's floor is overridden down to 1 wei, so severely underpriced test
transactions exist only there. Scheduling is deterministic: events are
processed in (time, sequence) order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

from ..chain.state import BlockParams, Chain, apply_transaction
from ..chain.types import Block, Transaction
from ..errors import UnknownNode

INSTRUMENTED_FLOOR = 1  # wei; the "mine anything" override


@dataclass
class NodePolicy:
    min_gas_price: int = 10**9
    is_instrumented: bool = False

    @property
    def effective_floor(self) -> int:
        return INSTRUMENTED_FLOOR if self.is_instrumented else self.min_gas_price

    def admits(self, tx: Transaction) -> bool:
        return tx.gas_price >= self.effective_floor


@dataclass
class SimNode:
    node_id: int
    policy: NodePolicy
    chain: Chain
    pool: dict[bytes, Transaction] = field(default_factory=dict)
    seen_tx: dict[bytes, int] = field(default_factory=dict)   # hash -> hop count
    seen_blocks: set[bytes] = field(default_factory=set)
    rejected: set[bytes] = field(default_factory=set)
    drop_outbound_tx: bool = False  # straw-man firewall switch

    def head_number(self) -> int:
        return self.chain.head.number

    def contains_tx(self, tx_hash: bytes) -> bool:
        return any(tx.hash == tx_hash
                   for block in self.chain.blocks
                   for tx in block.transactions)


@dataclass(frozen=True)
class PropagationReport:
    tx_hash: str
    origin: int
    admitted: list[int]
    rejected: list[int]
    unseen: list[int]
    hops: dict[int, int]

    def to_json(self) -> dict:
        return {"tx_hash": self.tx_hash, "origin": self.origin,
                "admitted": self.admitted, "rejected": self.rejected,
                "unseen": self.unseen,
                "hops": {str(k): v for k, v in self.hops.items()}}


@dataclass(frozen=True)
class DesyncEvent:
    """A block referenced a transaction the receiving node never heard of."""
    node_id: int
    tx_hash: str
    block_number: int

    def to_json(self) -> dict:
        return {"node": self.node_id, "tx_hash": self.tx_hash,
                "block": self.block_number}


class SimNetwork:
    def __init__(self, chain_factory, node_policies: list[NodePolicy],
                 topology: list[tuple[int, int]]):
        """``chain_factory()`` builds one independent replica per node."""
        self.nodes: dict[int, SimNode] = {
            i: SimNode(i, policy, chain_factory())
            for i, policy in enumerate(node_policies)
        }
        self.neighbors: dict[int, list[int]] = {i: [] for i in self.nodes}
        for a, b in topology:
            if a not in self.nodes or b not in self.nodes:
                raise UnknownNode(f"edge ({a}, {b}) references a missing node")
            self.neighbors[a].append(b)
            self.neighbors[b].append(a)
        self._queue: list[tuple[int, int, int, tuple]] = []
        self._seq = 0
        self.clock = 0
        self.desync_events: list[DesyncEvent] = []

    # -- event plumbing ----------------------------------------------------
    def _post(self, at: int, node_id: int, message: tuple) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (at, self._seq, node_id, message))

    def run(self) -> None:
        """Drain the event queue (quiescence)."""
        while self._queue:
            at, _seq, node_id, message = heapq.heappop(self._queue)
            self.clock = max(self.clock, at)
            self._deliver(at, self.nodes[node_id], message)

    def _deliver(self, at: int, node: SimNode, message: tuple) -> None:
        kind = message[0]
        if kind == "tx":
            _, tx, hop = message
            if tx.hash in node.seen_tx:
                return
            node.seen_tx[tx.hash] = hop
            if not node.policy.admits(tx):
                node.rejected.add(tx.hash)
                return
            node.pool[tx.hash] = tx
            if node.drop_outbound_tx:
                return
            for peer in self.neighbors[node.node_id]:
                self._post(at + 1, peer, ("tx", tx, hop + 1))
        elif kind == "block":
            _, block = message
            if block.hash in node.seen_blocks:
                return
            node.seen_blocks.add(block.hash)
            self._import_block(node, block)
            for peer in self.neighbors[node.node_id]:
                self._post(at + 1, peer, ("block", block))

    # -- transaction and block flow ---------------------------------------
    def broadcast(self, origin: int, tx: Transaction, at: Optional[int] = None) -> PropagationReport:
        """Inject a transaction at ``origin``, flood to quiescence, report."""
        if origin not in self.nodes:
            raise UnknownNode(str(origin))
        self._post(self.clock if at is None else at, origin, ("tx", tx, 0))
        self.run()
        return self.report(tx, origin)

    def report(self, tx: Transaction, origin: int = -1) -> PropagationReport:
        admitted, rejected, unseen, hops = [], [], [], {}
        for i, node in sorted(self.nodes.items()):
            if tx.hash in node.seen_tx:
                hops[i] = node.seen_tx[tx.hash]
                if tx.hash in node.rejected:
                    rejected.append(i)
                else:
                    admitted.append(i)
            else:
                unseen.append(i)
        return PropagationReport(tx.hash_hex(), origin=origin, admitted=admitted,
                                 rejected=rejected, unseen=unseen, hops=hops)

    def mine(self, node_id: int) -> Block:
        """One mining round at ``node_id``; the block floods to all peers."""
        node = self.nodes.get(node_id)
        if node is None:
            raise UnknownNode(str(node_id))
        pool = sorted(node.pool.values(), key=lambda t: t.hash)
        block = node.chain.mine(pool)
        for tx in block.transactions:
            node.pool.pop(tx.hash, None)
        self._prune_pool(node)
        node.seen_blocks.add(block.hash)
        for peer in self.neighbors[node_id]:
            self._post(self.clock + 1, peer, ("block", block))
        self.run()
        return block

    def _import_block(self, node: SimNode, block: Block) -> None:
        chain = node.chain
        if block.number != chain.head.number + 1:
            return  # stale or competing height; schedules keep chains linear
        if block.parent_hash != chain.head.hash:
            return
        for tx in block.transactions:
            if tx.hash not in node.seen_tx:
                self.desync_events.append(
                    DesyncEvent(node.node_id, tx.hash_hex(), block.number))
        for tx in block.transactions:
            if tx.gas_price < chain.params.base_fee:
                return  # violates the post-London floor; reject whole block
        for tx in block.transactions:
            receipt, trace = apply_transaction(chain.state, tx, block,
                                               gas_schedule=chain.gas_schedule,
                                               block_hashes=chain.block_hashes())
            chain.receipts[tx.hash] = (receipt, trace)
            node.pool.pop(tx.hash, None)
        chain.state.head = block
        chain.blocks.append(block)
        self._prune_pool(node)

    def _prune_pool(self, node: SimNode) -> None:
        stale = [h for h, tx in node.pool.items()
                 if tx.nonce < node.chain.state.peek(tx.sender).nonce]
        for h in stale:
            node.pool.pop(h, None)

    # -- conveniences ------------------------------------------------------
    @property
    def quiescent(self) -> bool:
        return not self._queue

    def heads(self) -> dict[int, int]:
        return {i: n.head_number() for i, n in sorted(self.nodes.items())}

    def converged(self, ignore: Optional[set[int]] = None) -> bool:
        ignore = ignore or set()
        digests = {n.chain.head.hash for i, n in self.nodes.items() if i not in ignore}
        return len(digests) == 1

    def instrumented_ids(self) -> list[int]:
        return [i for i, n in sorted(self.nodes.items())
                if n.policy.is_instrumented]
