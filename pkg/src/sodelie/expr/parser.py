"""Recursive-descent parser for the infix expression language.

Grammar (whitespace is insignificant)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | IDENT | FUNC "(" expr ")" | "(" expr ")"

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``, and it is
right associative. Exponents must fold to an exact rational.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

from .nodes import FUNCTIONS, Expr, Num, add, call, div, mul, neg, num, power, sub, sym
from .symbols import SymbolTable


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at offset {position}")


class UndeclaredSymbolError(ExprError):
    def __init__(self, name: str, position: int = -1):
        self.name = name
        self.position = position
        super().__init__(f"undeclared symbol {name!r}")


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z0-9]+)*(?:_\(\d+\))?)
  | (?P<op>[-+*/^()])
""",
    re.VERBOSE,
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    pos = 0
    out = []
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(source)))
    return out


class _Parser:
    def __init__(self, source: str, allowed):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0
        self.allowed = allowed

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, val, pos = self.take()
        if val != text or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {what}", pos, self.source)

    def fail(self, tok, message=None):
        kind, val, pos = tok
        if message is None:
            message = "unexpected end of input" if kind == "end" else f"unexpected token {val!r}"
        raise ExprSyntaxError(message, pos, self.source)

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.fail(tok)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.term()
            left = add(left, right) if op == "+" else sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.unary()
            left = mul(left, right) if op == "*" else div(left, right)
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            at = self.peek()[2]
            e = self.unary()
            if not isinstance(e, Num):
                raise ExprSyntaxError("exponent must be a constant", at, self.source)
            if not isinstance(e.value, Fraction):
                raise ExprSyntaxError("exponent must be an exact rational, not a float", at, self.source)
            return power(base, e.value)
        return base

    def primary(self) -> Expr:
        tok = self.take()
        kind, val, pos = tok
        if kind == "number":
            if re.fullmatch(r"\d+", val):
                return num(int(val))
            return num(float(val))
        if kind == "ident":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if val in FUNCTIONS or val == "log":
                    self.take()
                    arg = self.expr()
                    self.expect(")")
                    return call(val, arg)
                if self.allowed is not None and val not in self.allowed:
                    raise UndeclaredSymbolError(val, pos)
                self.fail(nxt, f"{val!r} is not a function (implicit multiplication is not allowed)")
            if val in FUNCTIONS or val == "log":
                self.fail(nxt, f"function {val!r} needs an argument in parentheses")
            if self.allowed is not None and val not in self.allowed:
                raise UndeclaredSymbolError(val, pos)
            return sym(val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.fail(tok)


def parse(source: str, symbols: SymbolTable | Iterable[str] | None = None) -> Expr:
    """Parse ``source``; every identifier must be declared in ``symbols``.

    ``symbols`` is anything supporting ``in``; ``None`` accepts any identifier.
    """
    if not isinstance(source, str):
        raise TypeError("source must be a string")
    allowed = symbols
    if isinstance(symbols, (list, tuple)) or (symbols is not None and not hasattr(symbols, "__contains__")):
        allowed = frozenset(symbols)
    return _Parser(source, allowed).parse()


def parse_free(source: str) -> Expr:
    return parse(source, None)
