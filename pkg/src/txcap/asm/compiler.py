"""Compiler from contract ASTs to interpreter bytecode.

Deployment model mirrors the mainstream chain: ``compile()`` produces init
code that, when executed with the deployment calldata, writes the runtime
code to memory and RETURNs it; the chain installs the returned bytes as the
account code. Constructor arguments ride after the init code in calldata,
and the compiler bakes the init length into their CALLDATALOAD offsets.

Function selectors are the first 4 bytes of a 32-byte digest (sha256) of the
function name; there is no cross-ecosystem compatibility goal, so the digest
choice is documented rather than standardized.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..chain.types import Address
from ..errors import SelectorCollision, UndefinedLabel, ValidationFailure
from ..evm.opcodes import OPCODES, push_for
from . import ast

SELECTOR_SHIFT = 2**224
CALL_GAS_BUDGET = 200_000
WORD = 32


class CompileError(ValidationFailure):
    code = "compile_error"


def selector(fn_name: str) -> bytes:
    return hashlib.sha256(fn_name.encode()).digest()[:4]


def string_word(text: str) -> int:
    raw = text.encode("utf-8")
    if len(raw) > WORD:
        raise CompileError(f"string literal exceeds 32 bytes: {text!r}")
    return int.from_bytes(raw.ljust(WORD, b"\x00"), "big")


def word_string(value: int) -> str:
    return value.to_bytes(WORD, "big").rstrip(b"\x00").decode("utf-8", "replace")


def encode_arg(value: "int | str | bool | Address") -> int:
    if isinstance(value, Address):
        return value.to_int()
    if isinstance(value, bool):
        return 1 if value else 0
    if isinstance(value, str):
        return string_word(value)
    return int(value)


def encode_args(values: list) -> bytes:
    return b"".join(encode_arg(v).to_bytes(WORD, "big") for v in values)


@dataclass(frozen=True)
class SlotInfo:
    kind: str  # "plain" | "map"
    slot: int  # plain slot index, or the high-bits base for maps
    type: str


@dataclass
class CompiledContract:
    program: ast.ContractProgram
    init_code: bytes
    runtime_code: bytes
    selectors: dict[str, bytes]
    layout: dict[str, SlotInfo]

    @property
    def name(self) -> str:
        return self.program.name

    def selector_of(self, fn_name: str) -> bytes:
        return self.selectors[fn_name]

    def fn_by_selector(self, sel: bytes) -> str | None:
        for name, s in self.selectors.items():
            if s == sel:
                return name
        return None

    def deployment_args(self, ctor_args: list) -> bytes:
        """Calldata for a deployment transaction: init code then argument words."""
        return self.init_code + encode_args(ctor_args)


# -- symbolic instruction stream --------------------------------------------

_OP = "op"          # plain opcode
_PUSH = "push"      # PUSH of a concrete value, minimal width
_PUSHL = "pushl"    # PUSH3 of a label offset
_PUSHB = "pushb"    # PUSH4 of the constructor-argument calldata base
_LABEL = "label"    # label definition (emits nothing)


class _Emitter:
    def __init__(self, arg_base_mode: str):
        self.items: list[tuple[str, object]] = []
        self._labels = 0
        self.arg_base_mode = arg_base_mode  # "runtime" (base 4) | "init" (patched)

    def op(self, mnemonic: str) -> None:
        if mnemonic not in OPCODES:
            raise CompileError(f"unknown mnemonic {mnemonic}")
        self.items.append((_OP, mnemonic))

    def push(self, value: int) -> None:
        self.items.append((_PUSH, value))

    def push_label(self, label: str) -> None:
        self.items.append((_PUSHL, label))

    def push_arg_offset(self, index: int) -> None:
        if self.arg_base_mode == "runtime":
            self.push(4 + WORD * index)
        else:
            self.items.append((_PUSHB, index))

    def label(self, name: str) -> None:
        self.items.append((_LABEL, name))
        self.op("JUMPDEST")

    def fresh(self, hint: str) -> str:
        self._labels += 1
        return f"{hint}_{self._labels}"

    def assemble(self) -> bytes:
        offsets: dict[str, int] = {}
        pc = 0
        for kind, payload in self.items:
            if kind == _OP:
                pc += 1
            elif kind == _PUSH:
                _, width = push_for(int(payload))
                pc += 1 + width
            elif kind == _PUSHL:
                pc += 4  # PUSH3 + 3
            elif kind == _PUSHB:
                pc += 6  # PUSH5 + 5 (base + 32*i fits easily)
            elif kind == _LABEL:
                if payload in offsets:
                    raise CompileError(f"duplicate label {payload}")
                offsets[str(payload)] = pc
        total = pc
        out = bytearray()
        for kind, payload in self.items:
            if kind == _OP:
                out.append(OPCODES[str(payload)].byte)
            elif kind == _PUSH:
                value = int(payload)
                mnemonic, width = push_for(value)
                out.append(OPCODES[mnemonic].byte)
                out.extend(value.to_bytes(width, "big"))
            elif kind == _PUSHL:
                target = offsets.get(str(payload))
                if target is None:
                    raise UndefinedLabel(str(payload))
                out.append(OPCODES["PUSH3"].byte)
                out.extend(target.to_bytes(3, "big"))
            elif kind == _PUSHB:
                offset = total + WORD * int(payload)
                out.append(OPCODES["PUSH5"].byte)
                out.extend(offset.to_bytes(5, "big"))
        return bytes(out)


class _FnCompiler:
    def __init__(self, emitter: _Emitter, layout: dict[str, SlotInfo],
                 params: list[tuple[str, str]], revert_label: str):
        self.e = emitter
        self.layout = layout
        self.params = {name: i for i, (name, _t) in enumerate(params)}
        self.revert_label = revert_label

    # -- expressions (leave one word on the stack) ----------------------
    def expr(self, node: ast.Expr) -> None:
        e = self.e
        if isinstance(node, ast.IntLit):
            e.push(node.value)
        elif isinstance(node, ast.StrLit):
            e.push(string_word(node.text))
        elif isinstance(node, ast.BoolLit):
            e.push(1 if node.value else 0)
        elif isinstance(node, ast.VarRef):
            if node.name in self.params:
                e.push_arg_offset(self.params[node.name])
                e.op("CALLDATALOAD")
            elif node.name in self.layout:
                info = self.layout[node.name]
                if info.kind != "plain":
                    raise CompileError(f"{node.name} is a map; index it")
                e.push(info.slot)
                e.op("SLOAD")
            else:
                raise UndefinedLabel(node.name)
        elif isinstance(node, ast.MapRef):
            self._map_key(node)
            e.op("SLOAD")
        elif isinstance(node, ast.Builtin):
            e.op({
                "msg.sender": "CALLER",
                "msg.value": "CALLVALUE",
                "this.balance": "SELFBALANCE",
                "this.address": "ADDRESS",
                "block.number": "NUMBER",
                "block.timestamp": "TIMESTAMP",
                "block.difficulty": "DIFFICULTY",
                "block.coinbase": "COINBASE",
                "block.gaslimit": "GASLIMIT",
                "tx.gasprice": "GASPRICE",
            }[node.kind])
        elif isinstance(node, ast.BalanceOf):
            self.expr(node.addr)
            e.op("BALANCE")
        elif isinstance(node, ast.BlockHash):
            self.expr(node.number)
            e.op("BLOCKHASH")
        elif isinstance(node, ast.UnOp):
            self.expr(node.operand)
            e.op("ISZERO")
        elif isinstance(node, ast.BinOp):
            self._binop(node)
        else:  # pragma: no cover
            raise CompileError(f"unhandled expression {node!r}")

    def _binop(self, node: ast.BinOp) -> None:
        e = self.e
        op = node.op
        if op in ("and", "or"):
            # normalize both sides to 0/1 so bitwise AND/OR is boolean
            self.expr(node.left)
            e.op("ISZERO")
            e.op("ISZERO")
            self.expr(node.right)
            e.op("ISZERO")
            e.op("ISZERO")
            e.op("AND" if op == "and" else "OR")
            return
        # binary ops consume (top=left, next=right)
        self.expr(node.right)
        self.expr(node.left)
        table = {"+": ["ADD"], "-": ["SUB"], "*": ["MUL"], "/": ["DIV"],
                 "<": ["LT"], ">": ["GT"], "==": ["EQ"],
                 "!=": ["EQ", "ISZERO"], "<=": ["GT", "ISZERO"],
                 ">=": ["LT", "ISZERO"]}
        for m in table[op]:
            e.op(m)

    def _map_key(self, node: ast.MapRef) -> None:
        info = self.layout.get(node.name)
        if info is None or info.kind != "map":
            raise UndefinedLabel(node.name)
        self.expr(node.key)
        self.e.push(info.slot)
        self.e.op("OR")

    # -- statements ------------------------------------------------------
    def block(self, stmts: list[ast.Stmt]) -> None:
        for stmt in stmts:
            self.stmt(stmt)

    def stmt(self, node: ast.Stmt) -> None:
        e = self.e
        if isinstance(node, ast.Assign):
            self.expr(node.expr)
            if isinstance(node.target, ast.VarRef):
                info = self.layout.get(node.target.name)
                if info is None or info.kind != "plain":
                    raise UndefinedLabel(node.target.name)
                e.push(info.slot)
            else:
                self._map_key(node.target)
            e.op("SSTORE")
        elif isinstance(node, ast.Require):
            self.expr(node.cond)
            e.op("ISZERO")
            e.push_label(self.revert_label)
            e.op("JUMPI")
        elif isinstance(node, ast.If):
            l_else = e.fresh("else")
            l_end = e.fresh("endif")
            self.expr(node.cond)
            e.op("ISZERO")
            e.push_label(l_else)
            e.op("JUMPI")
            self.block(node.then)
            e.push_label(l_end)
            e.op("JUMP")
            e.label(l_else)
            self.block(node.els)
            e.label(l_end)
        elif isinstance(node, ast.While):
            l_top = e.fresh("loop")
            l_end = e.fresh("endloop")
            e.label(l_top)
            self.expr(node.cond)
            e.op("ISZERO")
            e.push_label(l_end)
            e.op("JUMPI")
            self.block(node.body)
            e.push_label(l_top)
            e.op("JUMP")
            e.label(l_end)
        elif isinstance(node, ast.Transfer):
            # CALL with empty calldata; a failed send reverts the caller
            e.push(0)  # retLen
            e.push(0)  # retOff
            e.push(0)  # argsLen
            e.push(0)  # argsOff
            self.expr(node.amount)
            self.expr(node.to)
            e.push(CALL_GAS_BUDGET)
            e.op("CALL")
            e.op("ISZERO")
            e.push_label(self.revert_label)
            e.op("JUMPI")
        elif isinstance(node, ast.CallStmt):
            # low-level call: selector in the first 4 calldata bytes,
            # result deliberately ignored
            e.push(int.from_bytes(selector(node.fn_name), "big") * SELECTOR_SHIFT)
            e.push(0)
            e.op("MSTORE")
            e.push(0)  # retLen
            e.push(0)  # retOff
            e.push(4)  # argsLen
            e.push(0)  # argsOff
            self.expr(node.value)
            self.expr(node.addr)
            e.push(CALL_GAS_BUDGET)
            e.op("CALL")
            e.op("POP")
        elif isinstance(node, ast.Revert):
            e.push(0)
            e.push(0)
            e.op("REVERT")
        elif isinstance(node, ast.Return):
            if node.expr is None:
                e.op("STOP")
            else:
                self.expr(node.expr)
                e.push(0)
                e.op("MSTORE")
                e.push(WORD)  # size
                e.push(0)     # offset
                e.op("RETURN")
        elif isinstance(node, ast.SelfDestruct):
            self.expr(node.heir)
            e.op("SELFDESTRUCT")
        else:  # pragma: no cover
            raise CompileError(f"unhandled statement {node!r}")


def _storage_layout(program: ast.ContractProgram) -> dict[str, SlotInfo]:
    layout: dict[str, SlotInfo] = {}
    plain = 0
    for i, decl in enumerate(program.storage):
        if decl.type == "map":
            layout[decl.name] = SlotInfo("map", (i + 1) << 160, decl.type)
        else:
            layout[decl.name] = SlotInfo("plain", plain, decl.type)
            plain += 1
    return layout


def _runtime(program: ast.ContractProgram, layout: dict[str, SlotInfo]) -> tuple[bytes, dict[str, bytes]]:
    e = _Emitter("runtime")
    revert_lbl = "revert_stub"
    selectors: dict[str, bytes] = {}
    for name in program.functions:
        sel = selector(name)
        for other, existing in selectors.items():
            if existing == sel:
                raise SelectorCollision(f"{name} collides with {other}")
        selectors[name] = sel

    # dispatcher
    e.op("CALLDATASIZE")
    e.op("ISZERO")
    e.push_label("fallback")
    e.op("JUMPI")
    e.push(SELECTOR_SHIFT)
    e.push(0)
    e.op("CALLDATALOAD")
    e.op("DIV")
    for name in program.functions:
        e.op("DUP1")
        e.push(int.from_bytes(selectors[name], "big"))
        e.op("EQ")
        e.push_label(f"fn_{name}")
        e.op("JUMPI")
    e.op("POP")
    e.push_label("fallback")
    e.op("JUMP")

    for name, fn in program.functions.items():
        e.label(f"fn_{name}")
        e.op("POP")  # drop the dispatched selector copy
        if not fn.payable:
            e.op("CALLVALUE")
            e.push_label(revert_lbl)
            e.op("JUMPI")
        _FnCompiler(e, layout, fn.params, revert_lbl).block(fn.body)
        e.op("STOP")

    e.label("fallback")
    if program.fallback is not None:
        fb = program.fallback
        if not fb.payable:
            e.op("CALLVALUE")
            e.push_label(revert_lbl)
            e.op("JUMPI")
        _FnCompiler(e, layout, fb.params, revert_lbl).block(fb.body)
        e.op("STOP")
    else:
        # implicit fallback is an empty non-payable body: value transfers
        # are rejected, plain unmatched calls halt cleanly
        e.op("CALLVALUE")
        e.push_label(revert_lbl)
        e.op("JUMPI")
        e.op("STOP")

    e.label(revert_lbl)
    e.push(0)
    e.push(0)
    e.op("REVERT")
    return e.assemble(), selectors


def _init(program: ast.ContractProgram, layout: dict[str, SlotInfo],
          runtime: bytes) -> bytes:
    e = _Emitter("init")
    revert_lbl = "revert_stub"
    ctor = program.constructor
    if ctor is not None:
        for stmt_kind in _walk_stmts(ctor.body):
            if isinstance(stmt_kind, ast.Return):
                raise CompileError("constructor cannot return")
        if not ctor.payable:
            e.op("CALLVALUE")
            e.push_label(revert_lbl)
            e.op("JUMPI")
        _FnCompiler(e, layout, ctor.params, revert_lbl).block(ctor.body)
    # write the runtime code to memory and hand it back to the chain
    for offset in range(0, len(runtime), WORD):
        chunk = runtime[offset:offset + WORD].ljust(WORD, b"\x00")
        e.push(int.from_bytes(chunk, "big"))
        e.push(offset)
        e.op("MSTORE")
    e.push(len(runtime))  # size
    e.push(0)             # offset
    e.op("RETURN")
    e.label(revert_lbl)
    e.push(0)
    e.push(0)
    e.op("REVERT")
    return e.assemble()


def _walk_stmts(stmts: list[ast.Stmt]):
    for s in stmts:
        yield s
        if isinstance(s, ast.If):
            yield from _walk_stmts(s.then)
            yield from _walk_stmts(s.els)
        elif isinstance(s, ast.While):
            yield from _walk_stmts(s.body)


def compile_contract(program: ast.ContractProgram) -> CompiledContract:
    """Deterministic compilation; recompiling yields byte-identical output."""
    layout = _storage_layout(program)
    runtime, selectors = _runtime(program, layout)
    init = _init(program, layout, runtime)
    return CompiledContract(program=program, init_code=init, runtime_code=runtime,
                            selectors=selectors, layout=layout)


def compile_source(source: str) -> CompiledContract:
    from .parser import parse_contract
    return compile_contract(parse_contract(source))


def compile(program: ast.ContractProgram) -> bytes:  # noqa: A001 - spec name
    """Init bytecode for deployment (see module docstring for the model)."""
    return compile_contract(program).init_code
