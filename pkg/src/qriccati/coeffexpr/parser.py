"""Recursive-descent parser for coefficient expressions.

Grammar (``^`` binds tighter than unary minus, and is right-associative)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | "t" | "pi" | "e" | FUNC "(" expr ")" | "(" expr ")"

so ``-t^2`` is ``Neg(Pow(t, 2))`` and ``2^-t`` is ``Pow(2, Neg(t))``.
Error offsets are byte offsets into the UTF-8 encoding of the source.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ExprSyntaxError
from .expr import (FUNCTIONS, Add, Const, Div, Expr, Func, Mul, NamedConst, Neg, Pow, Sub, Var)

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_PRIMARY_START = frozenset({"NUMBER", "t", "pi", "e", "FUNC", "(", "-"})


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, IDENT, an operator character, or END
    text: str
    offset: int  # byte offset


def tokenize(source: str) -> list[Token]:
    tokens = []
    i = 0
    byte = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            byte += len(ch.encode("utf-8"))
            i += 1
            continue
        m = _NUMBER.match(source, i)
        if m:
            tokens.append(Token("NUMBER", m.group(), byte))
        else:
            m = _IDENT.match(source, i)
            if m:
                tokens.append(Token("IDENT", m.group(), byte))
            elif ch in "+-*/^()":
                tokens.append(Token(ch, ch, byte))
                byte += 1
                i += 1
                continue
            else:
                raise ExprSyntaxError(f"unexpected character {ch!r}", byte, _PRIMARY_START, source)
        text = m.group()
        i = m.end()
        byte += len(text.encode("utf-8"))
    tokens.append(Token("END", "", byte))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def fail(self, expected, what=None):
        tok = self.tok
        found = "end of input" if tok.kind == "END" else repr(tok.text)
        raise ExprSyntaxError(what or f"unexpected {found}", tok.offset, frozenset(expected), self.source)

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "END":
            self.fail({"+", "-", "*", "/", "^", "END"})
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance().kind
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind in ("*", "/"):
            op = self.advance().kind
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "^":
            self.advance()
            return Pow(base, self.unary())
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "NUMBER":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "IDENT":
            name = tok.text
            if name == "t":
                self.advance()
                return Var()
            if name in ("pi", "e"):
                self.advance()
                return NamedConst(name)
            if name in FUNCTIONS:
                self.advance()
                if self.tok.kind != "(":
                    self.fail({"("})
                self.advance()
                arg = self.expr()
                if self.tok.kind != ")":
                    self.fail({")"})
                self.advance()
                return Func(name, arg)
            self.fail(_PRIMARY_START, f"unknown name {name!r}")
        if tok.kind == "(":
            self.advance()
            inner = self.expr()
            if self.tok.kind != ")":
                self.fail({")"})
            self.advance()
            return inner
        self.fail(_PRIMARY_START)


def parse_expr(source: str) -> Expr:
    """Parse ``source`` into an expression tree."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    return _Parser(source).parse()
