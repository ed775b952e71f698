"""Recursive-descent parser for ``.mvc`` contract sources."""

from __future__ import annotations

import re

from ..chain.types import ETHER, SHANNON
from ..errors import AsmSyntaxError
from . import ast

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<number>\d+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|[{}()\[\],:=<>+\-*/!.])
""", re.VERBOSE)

_UNITS = {"wei": 1, "shannon": SHANNON, "gwei": SHANNON, "ether": ETHER}
_TYPES = {"uint", "bool", "address", "string", "map"}
_KEYWORDS = {"contract", "storage", "constructor", "function", "fallback",
             "payable", "require", "if", "else", "while", "transfer", "call",
             "revert", "return", "selfdestruct", "true", "false", "and", "or",
             "not", "balance", "blockhash"} | _TYPES | set(_UNITS)


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, str, int]] = []  # (kind, text, line)
        line = 1
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise AsmSyntaxError(line, f"bad character {text[pos]!r}")
            kind = m.lastgroup
            tok = m.group()
            if kind != "ws":
                self.items.append((kind, tok, line))
            line += tok.count("\n")
            pos = m.end()
        self.i = 0

    def peek(self, k: int = 0) -> tuple[str, str, int]:
        j = self.i + k
        if j < len(self.items):
            return self.items[j]
        return ("eof", "", self.items[-1][2] if self.items else 1)

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, text: str) -> tuple[str, str, int]:
        kind, tok, line = self.next()
        if tok != text:
            raise AsmSyntaxError(line, f"expected {text!r}, got {tok!r}")
        return kind, tok, line

    def expect_ident(self) -> str:
        kind, tok, line = self.next()
        if kind != "ident":
            raise AsmSyntaxError(line, f"expected identifier, got {tok!r}")
        return tok

    def at(self, text: str) -> bool:
        return self.peek()[1] == text


def parse_contract(source: str) -> ast.ContractProgram:
    ts = _Tokens(source)
    ts.expect("contract")
    name = ts.expect_ident()
    ts.expect("{")
    program = ast.ContractProgram(name=name, storage=[])
    while not ts.at("}"):
        kind, tok, line = ts.peek()
        if tok == "storage":
            ts.next()
            var = ts.expect_ident()
            ts.expect(":")
            tkind, ttok, tline = ts.next()
            if ttok not in _TYPES:
                raise AsmSyntaxError(tline, f"unknown type {ttok!r}")
            program.storage.append(ast.StorageDecl(var, ttok))
        elif tok == "constructor":
            ts.next()
            program.constructor = _function(ts, "constructor")
        elif tok == "function":
            ts.next()
            fn_name = ts.expect_ident()
            fn = _function(ts, fn_name)
            if fn_name in program.functions:
                raise AsmSyntaxError(line, f"duplicate function {fn_name!r}")
            program.functions[fn_name] = fn
        elif tok == "fallback":
            ts.next()
            program.fallback = _function(ts, "fallback")
        else:
            raise AsmSyntaxError(line, f"unexpected {tok!r} in contract body")
    ts.expect("}")
    return program


def _function(ts: _Tokens, name: str) -> ast.FunctionDef:
    ts.expect("(")
    params: list[tuple[str, str]] = []
    while not ts.at(")"):
        pname = ts.expect_ident()
        ts.expect(":")
        tkind, ttok, tline = ts.next()
        if ttok not in _TYPES or ttok == "map":
            raise AsmSyntaxError(tline, f"bad parameter type {ttok!r}")
        params.append((pname, ttok))
        if ts.at(","):
            ts.next()
    ts.expect(")")
    payable = False
    if ts.at("payable"):
        ts.next()
        payable = True
    body = _block(ts)
    return ast.FunctionDef(name=name, params=params, payable=payable, body=body)


def _block(ts: _Tokens) -> list[ast.Stmt]:
    ts.expect("{")
    stmts: list[ast.Stmt] = []
    while not ts.at("}"):
        stmts.append(_statement(ts))
    ts.expect("}")
    return stmts


def _statement(ts: _Tokens) -> ast.Stmt:
    kind, tok, line = ts.peek()
    if tok == "require":
        ts.next()
        ts.expect("(")
        cond = _expr(ts)
        ts.expect(")")
        return ast.Require(cond)
    if tok == "if":
        ts.next()
        cond = _expr(ts)
        then = _block(ts)
        els: list[ast.Stmt] = []
        if ts.at("else"):
            ts.next()
            els = _block(ts)
        return ast.If(cond, then, els)
    if tok == "while":
        ts.next()
        cond = _expr(ts)
        body = _block(ts)
        return ast.While(cond, body)
    if tok == "transfer":
        ts.next()
        ts.expect("(")
        to = _expr(ts)
        ts.expect(",")
        amount = _expr(ts)
        ts.expect(")")
        return ast.Transfer(to, amount)
    if tok == "call":
        ts.next()
        ts.expect("(")
        addr = _expr(ts)
        ts.expect(",")
        skind, stok, sline = ts.next()
        if skind != "string":
            raise AsmSyntaxError(sline, "call() needs a quoted function name")
        ts.expect(",")
        value = _expr(ts)
        ts.expect(")")
        return ast.CallStmt(addr, _unquote(stok), value)
    if tok == "revert":
        ts.next()
        return ast.Revert()
    if tok == "return":
        ts.next()
        if ts.at("}"):
            return ast.Return(None)
        return ast.Return(_expr(ts))
    if tok == "selfdestruct":
        ts.next()
        ts.expect("(")
        heir = _expr(ts)
        ts.expect(")")
        return ast.SelfDestruct(heir)
    if kind == "ident":
        name = ts.expect_ident()
        if ts.at("["):
            ts.next()
            key = _expr(ts)
            ts.expect("]")
            target: ast.VarRef | ast.MapRef = ast.MapRef(name, key)
        else:
            target = ast.VarRef(name)
        ts.expect("=")
        return ast.Assign(target, _expr(ts))
    raise AsmSyntaxError(line, f"unexpected {tok!r}; expected a statement")


# expression precedence, loosest first
def _expr(ts: _Tokens) -> ast.Expr:
    return _or(ts)


def _or(ts: _Tokens) -> ast.Expr:
    left = _and(ts)
    while ts.at("or"):
        ts.next()
        left = ast.BinOp("or", left, _and(ts))
    return left


def _and(ts: _Tokens) -> ast.Expr:
    left = _cmp(ts)
    while ts.at("and"):
        ts.next()
        left = ast.BinOp("and", left, _cmp(ts))
    return left


def _cmp(ts: _Tokens) -> ast.Expr:
    left = _add(ts)
    while ts.peek()[1] in ("==", "!=", "<", ">", "<=", ">="):
        op = ts.next()[1]
        left = ast.BinOp(op, left, _add(ts))
    return left


def _add(ts: _Tokens) -> ast.Expr:
    left = _mul(ts)
    while ts.peek()[1] in ("+", "-"):
        op = ts.next()[1]
        left = ast.BinOp(op, left, _mul(ts))
    return left


def _mul(ts: _Tokens) -> ast.Expr:
    left = _unary(ts)
    while ts.peek()[1] in ("*", "/"):
        op = ts.next()[1]
        left = ast.BinOp(op, left, _unary(ts))
    return left


def _unary(ts: _Tokens) -> ast.Expr:
    if ts.at("!") or ts.at("not"):
        ts.next()
        return ast.UnOp("not", _unary(ts))
    return _primary(ts)


def _primary(ts: _Tokens) -> ast.Expr:
    kind, tok, line = ts.next()
    if tok == "(":
        inner = _expr(ts)
        ts.expect(")")
        return inner
    if kind == "number":
        value = int(tok)
        nkind, ntok, _ = ts.peek()
        if ntok in _UNITS:
            ts.next()
            value *= _UNITS[ntok]
        return ast.IntLit(value)
    if kind == "string":
        return ast.StrLit(_unquote(tok))
    if tok == "true":
        return ast.BoolLit(True)
    if tok == "false":
        return ast.BoolLit(False)
    if tok == "balance":
        ts.expect("(")
        addr = _expr(ts)
        ts.expect(")")
        return ast.BalanceOf(addr)
    if tok == "blockhash":
        ts.expect("(")
        number = _expr(ts)
        ts.expect(")")
        return ast.BlockHash(number)
    if tok == "msg":
        ts.expect(".")
        field = ts.expect_ident()
        if field not in ("sender", "value"):
            raise AsmSyntaxError(line, f"unknown msg.{field}")
        return ast.Builtin(f"msg.{field}")
    if tok == "this":
        ts.expect(".")
        field = ts.expect_ident()
        if field not in ("balance", "address"):
            raise AsmSyntaxError(line, f"unknown this.{field}")
        return ast.Builtin(f"this.{field}")
    if tok == "block":
        ts.expect(".")
        field = ts.expect_ident()
        if field not in ("number", "timestamp", "difficulty", "coinbase", "gaslimit"):
            raise AsmSyntaxError(line, f"unknown block.{field}")
        return ast.Builtin(f"block.{field}")
    if tok == "tx":
        ts.expect(".")
        field = ts.expect_ident()
        if field != "gasprice":
            raise AsmSyntaxError(line, f"unknown tx.{field}")
        return ast.Builtin("tx.gasprice")
    if kind == "ident":
        if ts.at("["):
            ts.next()
            key = _expr(ts)
            ts.expect("]")
            return ast.MapRef(tok, key)
        return ast.VarRef(tok)
    raise AsmSyntaxError(line, f"unexpected {tok!r} in expression")


def _unquote(tok: str) -> str:
    body = tok[1:-1]
    return body.replace('\\"', '"').replace("\\\\", "\\")
