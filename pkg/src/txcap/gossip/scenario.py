"""Scenario files: JSON descriptions of a network plus a scripted schedule.

Shape:

.. code-block:: json

    {
      "genesis": {"params": {...}, "accounts": [...]},
      "nodes": [{"id": 0, "min_gas_price": 1000000000, "instrumented": true}],
      "topology": [[0, 1], [1, 2]],
      "script": [
        {"at": 0, "action": "broadcast", "origin": 0, "tx": {...}},
        {"at": 5, "action": "mine", "node": 1},
        {"at": 9, "action": "firewall", "node": 2}
      ]
    }
"""

from __future__ import annotations

import json
from pathlib import Path

from ..chain.genesis import genesis_chain
from ..chain.types import Transaction
from ..errors import DomainError
from .network import NodePolicy, SimNetwork

_NODE_KEYS = {"id", "min_gas_price", "instrumented"}


def build_network(doc: dict) -> SimNetwork:
    genesis_doc = doc.get("genesis", {})
    policies: list[NodePolicy] = []
    node_entries = sorted(doc.get("nodes", []), key=lambda n: n["id"])
    for i, entry in enumerate(node_entries):
        unknown = set(entry) - _NODE_KEYS
        if unknown:
            raise DomainError(f"unknown node keys: {sorted(unknown)}")
        if entry["id"] != i:
            raise DomainError("node ids must be 0..n-1 without gaps")
        policies.append(NodePolicy(
            min_gas_price=int(entry.get("min_gas_price", 10**9)),
            is_instrumented=bool(entry.get("instrumented", False)),
        ))
    topology = [(int(a), int(b)) for a, b in doc.get("topology", [])]
    return SimNetwork(lambda: genesis_chain(genesis_doc), policies, topology)


def run_scenario(doc: dict) -> dict:
    """Execute the script in time order; returns a machine-readable report."""
    net = build_network(doc)
    reports = []
    mined = []
    script = sorted(doc.get("script", []), key=lambda step: int(step.get("at", 0)))
    for step in script:
        action = step.get("action")
        if action == "broadcast":
            tx = Transaction.from_json(step["tx"])
            reports.append(net.broadcast(int(step["origin"]), tx,
                                         at=int(step.get("at", net.clock))).to_json())
        elif action == "mine":
            block = net.mine(int(step["node"]))
            mined.append({"node": int(step["node"]), "number": block.number,
                          "transactions": [tx.hash_hex() for tx in block.transactions]})
        elif action == "firewall":
            net.nodes[int(step["node"])].drop_outbound_tx = True
        else:
            raise DomainError(f"unknown scenario action {action!r}")
    return {
        "propagation": reports,
        "mined": mined,
        "heads": {str(i): h for i, h in net.heads().items()},
        "converged": net.converged(),
        "desync_events": [e.to_json() for e in net.desync_events],
    }


def load_scenario(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
