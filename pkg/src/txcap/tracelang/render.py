"""Render executed transactions as trace documents.

The caller selects exactly which variables appear in each entry's pre and
post lists; everything else is elided. REVERT replaces the post list when
the receipt reverted. Inter-contract calls become nested entries with a
minimal default selection (msg.value before, outcome after).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..asm.compiler import CompiledContract, word_string
from ..chain.types import Address, Receipt, Transaction, WorldState
from ..errors import UnknownVariable
from ..evm.trace import Frame
from .ast import Amount, Assignment, Hex, Name, Text, TraceDoc, TraceEntry, Value


@dataclass(frozen=True)
class VarSpec:
    """One selected variable: where to read it and how to label it.

    kinds: msg.sender, msg.value, this.balance, sender.balance,
    storage (name), map (name + key), arg (constructor/function argument
    by name).
    """

    kind: str
    name: str = ""
    key: Optional[Address] = None
    label: str = ""
    unit: str = "wei"

    def lhs(self, symbols: dict[Address, str]) -> Name:
        if self.label:
            return Name(self.label)
        if self.kind == "map" and self.key is not None:
            shown = symbols.get(self.key, self.key.hex())
            return Name(f"{self.name}({shown})")
        if self.kind == "storage" or self.kind == "arg":
            return Name(self.name)
        return Name({"msg.sender": "msg.sender", "msg.value": "msg.value",
                     "this.balance": "this.balance",
                     "sender.balance": "msg.sender.balance"}[self.kind])


@dataclass
class RunStep:
    """One executed transaction with its surrounding state snapshots."""

    contract_label: str
    fn_label: str
    tx: Transaction
    pre_state: WorldState
    post_state: WorldState
    receipt: Receipt
    trace: Frame
    pre: list[VarSpec] = field(default_factory=list)
    post: list[VarSpec] = field(default_factory=list)


def _address_value(addr: Address, symbols: dict[Address, str]) -> Value:
    sym = symbols.get(addr)
    return Name(sym) if sym else Hex(addr.hex())


def _storage_value(compiled: CompiledContract, name: str, raw: int,
                   symbols: dict[Address, str], unit: str) -> Value:
    info = compiled.layout.get(name)
    vtype = info.type if info else "uint"
    if vtype == "bool":
        return Name("true" if raw else "false")
    if vtype == "address":
        return _address_value(Address.from_int(raw & (2**160 - 1)), symbols)
    if vtype == "string":
        return Text(word_string(raw))
    return Amount(raw, unit if unit != "wei" else "")


def _resolve(spec: VarSpec, step: RunStep, state: WorldState, target: Address,
             compiled: Optional[CompiledContract],
             symbols: dict[Address, str]) -> Value:
    if spec.kind == "msg.sender":
        return _address_value(step.tx.sender, symbols)
    if spec.kind == "msg.value":
        return Amount(step.tx.value, spec.unit)
    if spec.kind == "this.balance":
        return Amount(state.balance_of(target), spec.unit)
    if spec.kind == "sender.balance":
        return Amount(state.balance_of(step.tx.sender), spec.unit)
    if compiled is None:
        raise UnknownVariable(f"{spec.kind} {spec.name}: no contract metadata")
    if spec.kind == "storage":
        info = compiled.layout.get(spec.name)
        if info is None or info.kind != "plain":
            raise UnknownVariable(spec.name)
        return _storage_value(compiled, spec.name,
                              state.peek(target).storage.get(info.slot, 0),
                              symbols, spec.unit)
    if spec.kind == "map":
        info = compiled.layout.get(spec.name)
        if info is None or info.kind != "map" or spec.key is None:
            raise UnknownVariable(spec.name)
        raw = state.peek(target).storage.get(info.slot | spec.key.to_int(), 0)
        return Amount(raw, spec.unit if spec.unit != "wei" else "")
    if spec.kind == "arg":
        params = _param_names(step, compiled)
        if spec.name not in params:
            raise UnknownVariable(spec.name)
        return _arg_value(step, compiled, params.index(spec.name), spec)
    raise UnknownVariable(spec.kind)


def _param_names(step: RunStep, compiled: CompiledContract) -> list[str]:
    program = compiled.program
    if step.tx.is_create():
        fn = program.constructor
    else:
        fn = program.functions.get(step.fn_label)
    return [name for name, _t in fn.params] if fn else []


def _arg_types(step: RunStep, compiled: CompiledContract) -> list[str]:
    program = compiled.program
    fn = program.constructor if step.tx.is_create() else program.functions.get(step.fn_label)
    return [t for _n, t in fn.params] if fn else []


def _arg_value(step: RunStep, compiled: CompiledContract, index: int,
               spec: VarSpec) -> Value:
    if step.tx.is_create():
        words = step.tx.args[len(compiled.init_code):]
    else:
        words = step.tx.args
    raw = int.from_bytes(words[index * 32:(index + 1) * 32], "big")
    vtype = _arg_types(step, compiled)[index]
    if vtype == "string":
        return Text(word_string(raw))
    if vtype == "bool":
        return Name("true" if raw else "false")
    if vtype == "address":
        return Hex(Address.from_int(raw).hex())
    return Amount(raw, spec.unit if spec.unit != "wei" else "")


def render_execution(steps: list[RunStep],
                     registry: dict[Address, CompiledContract],
                     symbols: Optional[dict[Address, str]] = None) -> TraceDoc:
    """Build a trace document from executed steps and their selections."""
    symbols = symbols or {}
    doc = TraceDoc()
    counter = [0]

    def next_index() -> int:
        counter[0] += 1
        return counter[0]

    for step in steps:
        target = (step.receipt.contract_address if step.tx.is_create()
                  else step.tx.recipient)
        compiled = registry.get(target)
        entry = TraceEntry(index=next_index(), contract=step.contract_label,
                           function=step.fn_label)
        entry.pre = [Assignment(spec.lhs(symbols),
                                _resolve(spec, step, step.pre_state, target,
                                         compiled, symbols))
                     for spec in step.pre]
        entry.children = _child_entries(step, step.trace, registry, next_index)
        if step.receipt.ok:
            entry.post = [Assignment(spec.lhs(symbols),
                                     _resolve(spec, step, step.post_state, target,
                                              compiled, symbols))
                          for spec in step.post]
        else:
            entry.post = None
        doc.entries.append(entry)
    return doc


def _child_entries(step: RunStep, frame: Frame,
                   registry: dict[Address, CompiledContract],
                   next_index) -> list[TraceEntry]:
    entries: list[TraceEntry] = []
    for _idx, child in frame.children:
        if not child.opcodes:
            # bare value transfer to an EOA (or its failure); no code ran,
            # so there is nothing to show as a nested call
            continue
        compiled = registry.get(child.callee)
        contract = compiled.name if compiled else child.callee.hex()
        fn = "fallback"
        if compiled and len(child.input) >= 4:
            fn = compiled.fn_by_selector(child.input[:4]) or "fallback"
        entry = TraceEntry(index=next_index(), contract=contract, function=fn)
        if child.value:
            entry.pre = [Assignment(Name("msg.value"), Amount(child.value, "wei"))]
        entry.children = _child_entries(step, child, registry, next_index)
        entry.post = None if child.reverted else []
        entries.append(entry)
    return entries
