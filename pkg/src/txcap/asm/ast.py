"""AST for the structured contract mini-language (``.mvc`` sources)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class StrLit:
    text: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class VarRef:
    """A storage variable or function parameter."""
    name: str


@dataclass(frozen=True)
class MapRef:
    name: str
    key: "Expr"


@dataclass(frozen=True)
class Builtin:
    """Environment values: msg.sender, msg.value, this.balance, this.address,
    block.number, block.timestamp, block.difficulty, block.coinbase,
    block.gaslimit, tx.gasprice."""
    kind: str


@dataclass(frozen=True)
class BalanceOf:
    addr: "Expr"


@dataclass(frozen=True)
class BlockHash:
    number: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / == != < > <= >= and or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnOp:
    op: str  # not
    operand: "Expr"


Expr = Union[IntLit, StrLit, BoolLit, VarRef, MapRef, Builtin, BalanceOf,
             BlockHash, BinOp, UnOp]


@dataclass
class Assign:
    target: Union[VarRef, MapRef]
    expr: Expr


@dataclass
class Require:
    cond: Expr


@dataclass
class If:
    cond: Expr
    then: list["Stmt"]
    els: list["Stmt"] = field(default_factory=list)


@dataclass
class While:
    cond: Expr
    body: list["Stmt"]


@dataclass
class Transfer:
    """Send value; reverts the caller when the recipient rejects it."""
    to: Expr
    amount: Expr


@dataclass
class CallStmt:
    """Low-level call by function name; the result is ignored."""
    addr: Expr
    fn_name: str
    value: Expr


@dataclass
class Revert:
    pass


@dataclass
class Return:
    expr: Optional[Expr] = None


@dataclass
class SelfDestruct:
    heir: Expr


Stmt = Union[Assign, Require, If, While, Transfer, CallStmt, Revert, Return,
             SelfDestruct]


@dataclass
class StorageDecl:
    name: str
    type: str  # uint | bool | address | string | map


@dataclass
class FunctionDef:
    name: str
    params: list[tuple[str, str]]
    payable: bool
    body: list[Stmt]


@dataclass
class ContractProgram:
    name: str
    storage: list[StorageDecl]
    constructor: Optional[FunctionDef] = None
    functions: dict[str, FunctionDef] = field(default_factory=dict)
    fallback: Optional[FunctionDef] = None
