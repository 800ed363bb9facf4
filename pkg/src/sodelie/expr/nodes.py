"""Immutable, hash-consed expression trees.

Every node is interned: two structurally identical trees are the same Python
object, so ``is`` doubles as structural equality and derivative caches are
shared between all users of a subtree.
"""

from __future__ import annotations

import math
import weakref
from fractions import Fraction
from typing import Iterable, Mapping

FUNCTIONS = ("sqrt", "exp", "ln", "sin", "cos", "abs", "sign")

_interned: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    __slots__ = ("_diff", "_free", "_code", "__weakref__")

    precedence = 5

    @classmethod
    def _make(cls, key: tuple, **attrs):
        node = _interned.get(key)
        if node is None:
            node = object.__new__(cls)
            for k, v in attrs.items():
                object.__setattr__(node, k, v)
            object.__setattr__(node, "_diff", {})
            object.__setattr__(node, "_free", None)
            object.__setattr__(node, "_code", None)
            _interned[key] = node
        return node

    def __setattr__(self, name, value):
        if name in ("_free", "_code"):
            object.__setattr__(self, name, value)
        else:
            raise AttributeError("Expr nodes are immutable")

    def __reduce__(self):
        # pickling goes through the printer so the interning invariant holds
        from .parser import parse_free

        return (parse_free, (to_string(self),))

    # -- structure ---------------------------------------------------------
    @property
    def children(self) -> tuple["Expr", ...]:
        return ()

    @property
    def free_symbols(self) -> frozenset[str]:
        if self._free is None:
            out: set[str] = set()
            for c in self.children:
                out |= c.free_symbols
            self._free = frozenset(out)
        return self._free

    def diff(self, var: str) -> "Expr":
        """Exact partial derivative with respect to the symbol ``var``."""
        cached = self._diff.get(var)
        if cached is not None:
            return cached
        if var not in self.free_symbols:
            result = ZERO
        else:
            result = self._diff_impl(var)
        self._diff[var] = result
        return result

    def _diff_impl(self, var: str) -> "Expr":  # pragma: no cover - abstract
        raise NotImplementedError

    def subs(self, mapping: Mapping[str, "Expr | float | int | Fraction"]) -> "Expr":
        if not mapping:
            return self
        m = {k: as_expr(v) for k, v in mapping.items()}
        return _subs(self, m, {})

    def rebuild(self, children: tuple["Expr", ...]) -> "Expr":
        return self

    def evaluate(self, point: Mapping[str, float]) -> float:
        from .compile import evaluate

        return evaluate(self, point)

    def is_number(self) -> bool:
        return isinstance(self, Num)

    # -- operators ---------------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __str__(self) -> str:
        return to_string(self)

    def __repr__(self) -> str:
        return f"Expr({to_string(self)!r})"


class Num(Expr):
    __slots__ = ("value",)

    @property
    def precedence(self):
        v = self.value
        if isinstance(v, Fraction) and v.denominator != 1:
            return 2
        return 3 if v < 0 else 5

    def _diff_impl(self, var):
        return ZERO


class Sym(Expr):
    __slots__ = ("name",)

    @property
    def free_symbols(self):
        if self._free is None:
            self._free = frozenset((self.name,))
        return self._free

    def _diff_impl(self, var):
        return ONE if var == self.name else ZERO


class Neg(Expr):
    __slots__ = ("arg",)
    precedence = 3

    @property
    def children(self):
        return (self.arg,)

    def rebuild(self, children):
        return neg(children[0])

    def _diff_impl(self, var):
        return neg(self.arg.diff(var))


class BinOp(Expr):
    __slots__ = ("left", "right")
    symbol = "?"

    @property
    def children(self):
        return (self.left, self.right)


class Add(BinOp):
    __slots__ = ()
    symbol = "+"
    precedence = 1

    def rebuild(self, children):
        return add(*children)

    def _diff_impl(self, var):
        return add(self.left.diff(var), self.right.diff(var))


class Sub(BinOp):
    __slots__ = ()
    symbol = "-"
    precedence = 1

    def rebuild(self, children):
        return sub(*children)

    def _diff_impl(self, var):
        return sub(self.left.diff(var), self.right.diff(var))


class Mul(BinOp):
    __slots__ = ()
    symbol = "*"
    precedence = 2

    def rebuild(self, children):
        return mul(*children)

    def _diff_impl(self, var):
        a, b = self.left, self.right
        return add(mul(a.diff(var), b), mul(a, b.diff(var)))


class Div(BinOp):
    __slots__ = ()
    symbol = "/"
    precedence = 2

    def rebuild(self, children):
        return div(*children)

    def _diff_impl(self, var):
        a, b = self.left, self.right
        da, db = a.diff(var), b.diff(var)
        return sub(div(da, b), div(mul(a, db), power(b, 2)))


class Pow(Expr):
    """``base ^ exp`` with an exact rational exponent."""

    __slots__ = ("base", "exp")
    precedence = 4

    @property
    def children(self):
        return (self.base,)

    def rebuild(self, children):
        return power(children[0], self.exp)

    def _diff_impl(self, var):
        b = self.base
        return mul(mul(num(self.exp), power(b, self.exp - 1)), b.diff(var))


class Func(Expr):
    __slots__ = ("name", "arg")

    @property
    def children(self):
        return (self.arg,)

    def rebuild(self, children):
        return call(self.name, children[0])

    def _diff_impl(self, var):
        u = self.arg
        du = u.diff(var)
        name = self.name
        if name == "sqrt":
            return div(du, mul(TWO, self))
        if name == "exp":
            return mul(self, du)
        if name == "ln":
            return div(du, u)
        if name == "sin":
            return mul(call("cos", u), du)
        if name == "cos":
            return neg(mul(call("sin", u), du))
        if name == "abs":
            # d|u| = sign(u) du, valid off u = 0
            return mul(call("sign", u), du)
        if name == "sign":
            return ZERO
        raise ValueError(f"unknown function {name!r}")


# -- leaf constructors -----------------------------------------------------


def num(value) -> Num:
    if isinstance(value, Num):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        value = Fraction(value)
    elif isinstance(value, Fraction):
        pass
    elif isinstance(value, float):
        if value == 0.0:
            value = 0.0  # drop the sign of -0.0
    else:
        value = float(value)
    return Num._make((Num, type(value), value), value=value)


def sym(name: str) -> Sym:
    return Sym._make((Sym, name), name=name)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return num(x)


ZERO = num(0)
ONE = num(1)
TWO = num(2)


def _is(e: Expr, v) -> bool:
    return isinstance(e, Num) and e.value == v


def _fold(a, b, op):
    try:
        r = op(a, b)
    except (ZeroDivisionError, OverflowError, ValueError):
        return None
    if isinstance(r, float) and not math.isfinite(r):
        return None
    return num(r)


# -- smart constructors ----------------------------------------------------


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg._make((Neg, a), arg=a)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        r = _fold(a.value, b.value, lambda x, y: x + y)
        if r is not None:
            return r
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add._make((Add, a, b), left=a, right=b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        r = _fold(a.value, b.value, lambda x, y: x - y)
        if r is not None:
            return r
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if a is b:
        return ZERO
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub._make((Sub, a, b), left=a, right=b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        r = _fold(a.value, b.value, lambda x, y: x * y)
        if r is not None:
            return r
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if _is(a, -1):
        return neg(b)
    if _is(b, -1):
        return neg(a)
    return Mul._make((Mul, a, b), left=a, right=b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        r = _fold(a.value, b.value, lambda x, y: x / y)
        if r is not None:
            return r
    if _is(b, 1):
        return a
    if _is(a, 0) and not (isinstance(b, Num) and b.value == 0):
        return ZERO
    return Div._make((Div, a, b), left=a, right=b)


def power(base: Expr, exponent) -> Expr:
    if isinstance(exponent, Num):
        exponent = exponent.value
    if isinstance(exponent, bool) or not isinstance(exponent, (int, Fraction)):
        raise TypeError(f"exponents must be exact rationals, got {exponent!r}")
    e = Fraction(exponent)
    base = as_expr(base)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Num) and e.denominator == 1 and isinstance(base.value, Fraction):
        if base.value != 0 or e > 0:
            return num(base.value ** int(e))
    return Pow._make((Pow, base, e), base=base, exp=e)


_FOLD_EXACT = {
    ("sin", 0): 0,
    ("cos", 0): 1,
    ("exp", 0): 1,
    ("ln", 1): 0,
    ("sqrt", 0): 0,
    ("sqrt", 1): 1,
}


def call(name: str, a: Expr) -> Expr:
    if name == "log":
        name = "ln"
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    a = as_expr(a)
    if isinstance(a, Num):
        v = a.value
        if (name, v) in _FOLD_EXACT:
            return num(_FOLD_EXACT[(name, v)])
        if name == "abs":
            return num(abs(v))
        if name == "sign":
            return num((v > 0) - (v < 0))
        if isinstance(v, float):
            fn = {"sqrt": math.sqrt, "exp": math.exp, "ln": math.log, "sin": math.sin, "cos": math.cos}[name]
            try:
                r = fn(v)
            except (ValueError, OverflowError):
                r = None
            if r is not None and math.isfinite(r):
                return num(r)
    if name == "sign" and isinstance(a, Func) and a.name == "sign":
        return a
    return Func._make((Func, name, a), name=name, arg=a)


def sqrt(a):
    return call("sqrt", as_expr(a))


def exp(a):
    return call("exp", as_expr(a))


def ln(a):
    return call("ln", as_expr(a))


def sin(a):
    return call("sin", as_expr(a))


def cos(a):
    return call("cos", as_expr(a))


def sum_exprs(items: Iterable[Expr]) -> Expr:
    total: Expr = ZERO
    for it in items:
        total = add(total, as_expr(it))
    return total


# -- traversal helpers -----------------------------------------------------


def _subs(e: Expr, m: Mapping[str, Expr], memo: dict) -> Expr:
    hit = memo.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Sym):
        out = m.get(e.name, e)
    elif not (e.free_symbols & m.keys()):
        out = e
    else:
        out = e.rebuild(tuple(_subs(c, m, memo) for c in e.children))
    memo[e] = out
    return out


def postorder(roots: Iterable[Expr]) -> list[Expr]:
    """Unique nodes of the DAG below ``roots``, children before parents."""
    seen: set[int] = set()
    order: list[Expr] = []
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                if id(node) not in seen:
                    seen.add(id(node))
                    order.append(node)
                continue
            if id(node) in seen:
                continue
            stack.append((node, True))
            for c in reversed(node.children):
                if id(c) not in seen:
                    stack.append((c, False))
    return order


def count_nodes(e: Expr) -> int:
    return len(postorder([e]))


# -- printing --------------------------------------------------------------


def _num_str(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    return repr(v)


def to_string(e: Expr) -> str:
    """Infix rendering that parses back to the same tree."""
    memo: dict[int, str] = {}
    for node in postorder([e]):
        memo[id(node)] = _render(node, memo)
    return memo[id(e)]


def _wrap(child: Expr, memo, min_prec: int) -> str:
    s = memo[id(child)]
    return f"({s})" if child.precedence < min_prec else s


def _render(node: Expr, memo) -> str:
    if isinstance(node, Num):
        return _num_str(node.value)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, memo, 3)
    if isinstance(node, (Add, Sub)):
        return f"{_wrap(node.left, memo, 1)} {node.symbol} {_wrap(node.right, memo, 2)}"
    if isinstance(node, (Mul, Div)):
        return f"{_wrap(node.left, memo, 2)}{node.symbol}{_wrap(node.right, memo, 3)}"
    if isinstance(node, Pow):
        e = node.exp
        es = str(e.numerator) if (e.denominator == 1 and e >= 0) else f"({_num_str(e)})"
        return f"{_wrap(node.base, memo, 5)}^{es}"
    if isinstance(node, Func):
        return f"{node.name}({memo[id(node.arg)]})"
    raise TypeError(node)
