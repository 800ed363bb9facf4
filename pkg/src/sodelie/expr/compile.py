"""Code generation from expression DAGs to Python callables.

Shared subexpressions are computed once. ``math`` works on Python floats
and returns NaN instead of raising on domain errors; ``numpy`` broadcasts
over arrays under ``np.errstate(all="ignore")``; ``mpmath`` evaluates in
the caller's ``mpmath.mp`` precision, with exact rational constants.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import mpmath
import numpy as np

from .nodes import Add, Div, Expr, Func, Mul, Neg, Num, Pow, Sub, Sym, postorder

NAN = float("nan")


class UnassignedSymbolError(KeyError):
    def __init__(self, names):
        self.names = tuple(sorted(names))
        super().__init__(f"no value for symbol(s) {', '.join(self.names)}")


# -- scalar helpers: never raise, return NaN/inf like IEEE would ----------


def _sdiv(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        if a != a or a == 0:
            return NAN
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _sln(a):
    if a > 0:
        return math.log(a)
    return -math.inf if a == 0 else NAN


def _ssqrt(a):
    return math.sqrt(a) if a >= 0 else NAN


def _sexp(a):
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _ssin(a):
    try:
        return math.sin(a)
    except ValueError:
        return NAN


def _scos(a):
    try:
        return math.cos(a)
    except ValueError:
        return NAN


def _ssign(a):
    if a > 0:
        return 1.0
    if a < 0:
        return -1.0
    return 0.0 if a == 0 else NAN


def _spow(a, p):
    try:
        r = a**p
    except ZeroDivisionError:
        return math.inf
    except OverflowError:
        return math.inf
    if isinstance(r, complex):
        return NAN
    return r


def _mdiv(a, b):
    return a / b if b != 0 else mpmath.mpf("nan")


def _msqrt(a):
    return mpmath.sqrt(a) if a >= 0 else mpmath.mpf("nan")


def _mln(a):
    return mpmath.log(a) if a > 0 else mpmath.mpf("nan")


def _mpow(a, p):
    if a < 0 and Fraction(p).denominator % 2 == 0:
        return mpmath.mpf("nan")
    if a == 0 and p < 0:
        return mpmath.mpf("inf")
    if a < 0:
        return -mpmath.power(-a, mpmath.mpf(p.numerator) / p.denominator)
    return mpmath.power(a, mpmath.mpf(p.numerator) / p.denominator)


def _mq(p, q):
    return mpmath.mpf(p) / q


_MP_FUNCS = {
    "sqrt": "_msqrt",
    "exp": "_mp.exp",
    "ln": "_mln",
    "sin": "_mp.sin",
    "cos": "_mp.cos",
    "abs": "abs",
    "sign": "_mp.sign",
}

_SCALAR_FUNCS = {
    "sqrt": "_ssqrt",
    "exp": "_sexp",
    "ln": "_sln",
    "sin": "_ssin",
    "cos": "_scos",
    "abs": "abs",
    "sign": "_ssign",
}

_NUMPY_FUNCS = {
    "sqrt": "_np.sqrt",
    "exp": "_np.exp",
    "ln": "_np.log",
    "sin": "_np.sin",
    "cos": "_np.cos",
    "abs": "_np.abs",
    "sign": "_np.sign",
}

_NAMESPACE = {
    "_sdiv": _sdiv,
    "_sln": _sln,
    "_ssqrt": _ssqrt,
    "_sexp": _sexp,
    "_ssin": _ssin,
    "_scos": _scos,
    "_ssign": _ssign,
    "_spow": _spow,
    "_np": np,
    "_mp": mpmath,
    "_mdiv": _mdiv,
    "_msqrt": _msqrt,
    "_mln": _mln,
    "_mpow": _mpow,
    "_mq": _mq,
    "_Fraction": Fraction,
    "nan": NAN,
    "inf": math.inf,
}


def _const(v) -> str:
    f = float(v)
    if math.isnan(f):
        return "nan"
    if math.isinf(f):
        return "inf" if f > 0 else "(-inf)"
    return repr(f)


def _pow_code(base: str, p: Fraction, backend: str) -> str:
    if backend == "mpmath":
        if p.denominator == 1 and p >= 0:
            return f"{base}**{int(p)}"
        if p.denominator == 1:
            return f"_mdiv(1, {base}**{-int(p)})"
        return f"_mpow({base}, _Fraction({p.numerator}, {p.denominator}))"
    if p.denominator == 1:
        n = int(p)
        if n == 2:
            return f"{base}*{base}"
        if n == 3:
            return f"{base}*{base}*{base}"
        if n == -1:
            return f"_sdiv(1.0, {base})" if backend == "math" else f"1.0/{base}"
        if n == -2:
            return f"_sdiv(1.0, {base}*{base})" if backend == "math" else f"1.0/({base}*{base})"
        exp_code = repr(float(n))
    else:
        if p == Fraction(1, 2):
            return f"_ssqrt({base})" if backend == "math" else f"_np.sqrt({base})"
        exp_code = repr(float(p))
    if backend == "math":
        return f"_spow({base}, {exp_code})"
    return f"_np.power({base}, {exp_code})"


def generate_source(exprs: Sequence[Expr], args: Sequence[str], backend: str = "math") -> str:
    """Python source for ``def _f(<args>)`` returning a tuple of values."""
    if backend not in ("math", "numpy", "mpmath"):
        raise ValueError(f"unknown backend {backend!r}")
    argnames = {name: f"a{i}" for i, name in enumerate(args)}
    names: dict[int, str] = {}
    lines: list[str] = []
    counter = 0
    for node in postorder(exprs):
        if isinstance(node, Num):
            if backend == "mpmath":
                v = node.value
                names[id(node)] = (f"_mq({v.numerator}, {v.denominator})" if isinstance(v, Fraction)
                                   else f"_mp.mpf({_const(v)!r})")
                continue
            c = _const(node.value)
            # numpy scalars so that constant subexpressions like 0/0 give nan, not an exception
            names[id(node)] = c if backend == "math" else f"_np.float64({c})"
            continue
        if isinstance(node, Sym):
            try:
                names[id(node)] = argnames[node.name]
            except KeyError:
                raise UnassignedSymbolError([node.name]) from None
            continue
        ch = [names[id(c)] for c in node.children]
        if isinstance(node, Neg):
            code = f"-{ch[0]}"
        elif isinstance(node, Add):
            code = f"{ch[0]} + {ch[1]}"
        elif isinstance(node, Sub):
            code = f"{ch[0]} - {ch[1]}"
        elif isinstance(node, Mul):
            code = f"{ch[0]}*{ch[1]}"
        elif isinstance(node, Div):
            code = f"{ch[0]}/{ch[1]}" if backend == "numpy" else f"{'_mdiv' if backend == 'mpmath' else '_sdiv'}({ch[0]}, {ch[1]})"
        elif isinstance(node, Pow):
            code = _pow_code(ch[0], node.exp, backend)
        elif isinstance(node, Func):
            table = {"math": _SCALAR_FUNCS, "numpy": _NUMPY_FUNCS, "mpmath": _MP_FUNCS}[backend]
            code = f"{table[node.name]}({ch[0]})"
        else:  # pragma: no cover
            raise TypeError(node)
        tmp = f"_{counter}"
        counter += 1
        lines.append(f"    {tmp} = {code}")
        names[id(node)] = tmp
    outs = ", ".join(names[id(e)] for e in exprs)
    header = f"def _f({', '.join(argnames[a] for a in args)}):"
    body = lines + [f"    return ({outs}{',' if len(exprs) == 1 else ''})"]
    return "\n".join([header] + body)


@lru_cache(maxsize=4096)
def _compile_cached(exprs: tuple[Expr, ...], args: tuple[str, ...], backend: str) -> Callable:
    src = generate_source(exprs, args, backend)
    ns = dict(_NAMESPACE)
    exec(compile(src, "<sodelie-expr>", "exec"), ns)
    return ns["_f"]


def compile_exprs(exprs: Sequence[Expr], args: Sequence[str], backend: str = "math") -> Callable:
    """Callable ``f(*values)`` returning a tuple with one value per expression.

    With the numpy backend the outputs are broadcast against each other.
    """
    exprs = tuple(exprs)
    args = tuple(args)
    missing = set().union(*(e.free_symbols for e in exprs)) - set(args) if exprs else set()
    if missing:
        raise UnassignedSymbolError(missing)
    raw = _compile_cached(exprs, args, backend)
    if backend != "numpy":
        return raw

    def vectorized(*values):
        with np.errstate(all="ignore"):
            vals = [np.asarray(v, dtype=float) for v in values]
            out = raw(*vals)
            shape = np.broadcast_shapes(*(np.shape(v) for v in vals), *(np.shape(o) for o in out))
            return tuple(np.broadcast_to(np.asarray(o, dtype=float), shape) for o in out)

    return vectorized


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    """Value of ``e`` at ``point``; undefined subexpressions give NaN or inf."""
    args = tuple(sorted(e.free_symbols))
    missing = [a for a in args if a not in point]
    if missing:
        raise UnassignedSymbolError(missing)
    f = _compile_cached((e,), args, "math")
    return float(f(*(float(point[a]) for a in args))[0])


def evaluate_many(exprs: Sequence[Expr], point: Mapping[str, float]) -> list[float]:
    args = tuple(sorted(set().union(*(e.free_symbols for e in exprs)))) if exprs else ()
    missing = [a for a in args if a not in point]
    if missing:
        raise UnassignedSymbolError(missing)
    f = _compile_cached(tuple(exprs), args, "math")
    return [float(v) for v in f(*(float(point[a]) for a in args))]


def evaluate_array(e: Expr, points: Mapping[str, np.ndarray]) -> np.ndarray:
    args = tuple(sorted(e.free_symbols))
    missing = [a for a in args if a not in points]
    if missing:
        raise UnassignedSymbolError(missing)
    f = compile_exprs((e,), args, "numpy")
    shape = np.broadcast_shapes(*(np.shape(points[k]) for k in points)) if points else ()
    out = f(*(points[a] for a in args))[0]
    return np.broadcast_to(out, np.broadcast_shapes(shape, np.shape(out))).astype(float)
