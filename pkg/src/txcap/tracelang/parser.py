"""Recursive-descent parser for the trace language.

Indices accept plain decimals plus the circled-numeral glyphs used in
typeset traces. Indentation is not significant; nesting is recovered from
the grammar (a child entry sits between its parent's pre-list and post
bracket).
"""

from __future__ import annotations

import re

from ..errors import TraceSyntaxError
from .ast import Amount, Assignment, Combo, Hex, Name, Text, TraceDoc, TraceEntry, Value

_CIRCLED = {chr(0x2460 + i): i + 1 for i in range(20)}        # 1-20, white
_CIRCLED.update({chr(0x2776 + i): i + 1 for i in range(10)})  # 1-10, black

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<hex>0[xX][0-9a-fA-F]+)
  | (?P<number>\d+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<circled>[①-⑳❶-❿])
  | (?P<ident>[^\W\d][\w]*)
  | (?P<punct>[:.,=+\-()\[\]])
""", re.VERBOSE | re.UNICODE)


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TraceSyntaxError(line, col, f"a token (found {text[pos]!r})")
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, tok, line, col))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def _pos(self) -> tuple[int, int]:
        if self.i < len(self.toks):
            t = self.toks[self.i]
            return t.line, t.col
        if self.toks:
            t = self.toks[-1]
            return t.line, t.col + len(t.text)
        return 1, 1

    def fail(self, expected: str):
        line, col = self._pos()
        raise TraceSyntaxError(line, col, expected)

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            self.fail("more input")
        self.i += 1
        return tok

    def eat(self, text: str) -> _Tok:
        tok = self.peek()
        if tok is None or tok.text != text:
            self.fail(repr(text))
        return self.next()

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    def at_index(self) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind in ("number", "circled")

    # -- grammar ---------------------------------------------------------
    def doc(self) -> TraceDoc:
        doc = TraceDoc()
        while self.peek() is not None:
            doc.entries.append(self.entry())
        return doc

    def entry(self) -> TraceEntry:
        circled = self.peek() is not None and self.peek().kind == "circled"
        index = self.index()
        if self.at(":") or not circled:
            self.eat(":")  # typeset traces omit the colon after circled glyphs
        contract = self.ident()
        self.eat(".")
        function = self.ident()
        self.eat("(")
        pre = self.assign_list(closer=")")
        self.eat(")")
        entry = TraceEntry(index=index, contract=contract, function=function, pre=pre)
        while self.at_index():
            entry.children.append(self.entry())
        self.eat("[")
        tok = self.peek()
        if tok is not None and tok.kind == "ident" and tok.text == "REVERT":
            self.next()
            entry.post = None
        else:
            entry.post = self.assign_list(closer="]")
        self.eat("]")
        return entry

    def index(self) -> int:
        tok = self.peek()
        if tok is None:
            self.fail("an entry index")
        if tok.kind == "number":
            self.next()
            return int(tok.text)
        if tok.kind == "circled":
            self.next()
            return _CIRCLED[tok.text]
        self.fail("an entry index")

    def ident(self) -> str:
        tok = self.peek()
        if tok is None or tok.kind != "ident":
            self.fail("an identifier")
        self.next()
        return tok.text

    def assign_list(self, closer: str) -> list[Assignment]:
        items: list[Assignment] = []
        if self.at(closer):
            return items
        items.append(self.assignment())
        while self.at(","):
            self.next()
            items.append(self.assignment())
        return items

    def assignment(self) -> Assignment:
        lhs = self.name()
        self.eat("=")
        return Assignment(lhs=lhs, rhs=self.value_expr())

    def name(self) -> Name:
        parts = [self.ident()]
        while self.at("."):
            self.next()
            parts.append(self.ident())
        text = ".".join(parts)
        if self.at("("):
            self.next()
            arg = self.value_atom()
            self.eat(")")
            text += f"({arg})"
        return Name(text)

    def value_expr(self) -> Value:
        left = self.value_atom()
        while self.at("+") or self.at("-"):
            op = self.next().text
            left = Combo(left, op, self.value_atom())
        return left

    def value_atom(self) -> Value:
        tok = self.peek()
        if tok is None:
            self.fail("a value")
        if tok.kind == "hex":
            self.next()
            return Hex(tok.text)
        if tok.kind == "number":
            self.next()
            nxt = self.peek()
            if nxt is not None and nxt.kind == "ident" and nxt.text != "REVERT":
                self.next()
                return Amount(int(tok.text), nxt.text)
            return Amount(int(tok.text))
        if tok.kind == "string":
            self.next()
            body = tok.text[1:-1].replace('\\"', '"').replace("\\\\", "\\")
            return Text(body)
        if tok.kind == "ident":
            return self.name()
        self.fail("a value")


def parse(text: str) -> TraceDoc:
    """Parse trace text; raises :class:`TraceSyntaxError` with position."""
    return _Parser(text).doc()
