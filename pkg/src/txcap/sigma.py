"""Sigma-determinism classification of execution traces.

A transaction whose executed opcode stack touches none of the eight
chain-attribute probe opcodes is sigma-deterministic: replaying it against
an unchanged contract state is guaranteed to walk the identical path. The
probe opcodes split further by the weakness class they signal:

- NUMBER, TIMESTAMP       -> SWC-116 "Block Values as a Time Proxy"
- BLOCKHASH, COINBASE,
  GASLIMIT, DIFFICULTY,
  GASPRICE                -> SWC-120 "Weak Sources of Randomness from
                             Chain Attributes"
- BALANCE                 -> no marker; such traces are untestable

Classification is dynamic: it looks at the executed trace, not the code,
so a probe opcode on an untaken branch does not disqualify the transaction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import DomainError
from .evm.opcodes import STATE_PROBE_OPCODES
from .evm.trace import Frame, flatten_trace

SWC116 = "SWC-116"
SWC120 = "SWC-120"

MARKERS: dict[str, Optional[str]] = {
    "NUMBER": SWC116,
    "TIMESTAMP": SWC116,
    "BLOCKHASH": SWC120,
    "COINBASE": SWC120,
    "GASLIMIT": SWC120,
    "DIFFICULTY": SWC120,
    "GASPRICE": SWC120,
    "BALANCE": None,
}

VERDICT_DETERMINISTIC = "sigma-deterministic"
VERDICT_NONDETERMINISTIC = "sigma-nondeterministic"

PARTITION_DETERMINISTIC = "deterministic"
PARTITION_VULN_WARNING = "vuln-warning"
PARTITION_UNTESTABLE = "untestable"


@dataclass(frozen=True)
class NondeterminismSource:
    opcode: str
    marker: Optional[str]

    def to_json(self) -> dict:
        return {"opcode": self.opcode, "marker": self.marker}


@dataclass(frozen=True)
class Classification:
    verdict: str
    sources: frozenset[NondeterminismSource]
    partition: str

    @property
    def deterministic(self) -> bool:
        return self.verdict == VERDICT_DETERMINISTIC

    @property
    def markers(self) -> frozenset[str]:
        return frozenset(s.marker for s in self.sources if s.marker)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "sources": [s.to_json() for s in sorted(self.sources, key=lambda s: s.opcode)],
            "partition": self.partition,
            "markers": sorted(self.markers),
        }


def _classify_opcodes(present: set[str]) -> Classification:
    touched = present & STATE_PROBE_OPCODES
    sources = frozenset(NondeterminismSource(op, MARKERS[op]) for op in touched)
    if not sources:
        return Classification(VERDICT_DETERMINISTIC, sources, PARTITION_DETERMINISTIC)
    markers = {s.marker for s in sources if s.marker}
    partition = PARTITION_VULN_WARNING if markers else PARTITION_UNTESTABLE
    return Classification(VERDICT_NONDETERMINISTIC, sources, partition)


def classify_transaction(trace: Frame) -> Classification:
    """Classify one complete trace (finished execution, reverted or not).

    Identical opcodes within one call stack count as a single source.
    """
    present = {op.mnemonic for op in flatten_trace(trace)}
    return _classify_opcodes(present)


def classify_sequence(traces: Iterable[Frame]) -> Classification:
    """A sequence is deterministic only when every member is; sources union."""
    traces = list(traces)
    if not traces:
        raise DomainError("sequence classification needs at least one trace")
    present: set[str] = set()
    for trace in traces:
        present |= {op.mnemonic for op in flatten_trace(trace)}
    return _classify_opcodes(present)


GROUP_UNTESTABLE = "untestable"
GROUP_SWC120 = "swc-120"
GROUP_SWC116 = "swc-116"

_GROUP_OF = {op: (GROUP_SWC116 if mk == SWC116 else GROUP_SWC120 if mk == SWC120
                  else GROUP_UNTESTABLE)
             for op, mk in MARKERS.items()}


def occurrence_report(traces: Iterable[Frame]) -> dict:
    """Histogram of probe-opcode presence over traces.

    Each trace contributes at most one count per opcode (presence, not
    repetition). Group totals count traces touching at least one opcode of
    the group, so a trace spanning groups is counted once in each.
    """
    counts = {op: 0 for op in sorted(STATE_PROBE_OPCODES)}
    group_totals = {GROUP_UNTESTABLE: 0, GROUP_SWC120: 0, GROUP_SWC116: 0}
    total = 0
    nondeterministic = 0
    for trace in traces:
        total += 1
        present = {op.mnemonic for op in flatten_trace(trace)} & STATE_PROBE_OPCODES
        if not present:
            continue
        nondeterministic += 1
        for op in present:
            counts[op] += 1
        for group in {_GROUP_OF[op] for op in present}:
            group_totals[group] += 1
    return {
        "traces": total,
        "sigma_nondeterministic": nondeterministic,
        "counts": counts,
        "groups": {
            GROUP_UNTESTABLE: {"total": group_totals[GROUP_UNTESTABLE],
                               "opcodes": ["BALANCE"]},
            GROUP_SWC120: {"total": group_totals[GROUP_SWC120],
                           "opcodes": sorted(op for op, g in _GROUP_OF.items()
                                             if g == GROUP_SWC120)},
            GROUP_SWC116: {"total": group_totals[GROUP_SWC116],
                           "opcodes": sorted(op for op, g in _GROUP_OF.items()
                                             if g == GROUP_SWC116)},
        },
    }
