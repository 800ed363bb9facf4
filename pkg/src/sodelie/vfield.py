"""Vector fields over expression components, and their brackets."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expr import (
    TIME,
    ZERO,
    Expr,
    SymbolTable,
    ZeroVerdict,
    add,
    as_expr,
    compile_exprs,
    copy_name,
    is_zero_probabilistic,
    mul,
    neg,
    num,
    sub,
    sum_exprs,
    to_string,
)


class CoordinateMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class VectorField:
    """``sum_i components[i] * d/d coords[i]``.

    Components may mention parameters besides the coordinates. They may
    mention the time symbol only when ``time_dependent`` is set.
    """

    coords: tuple[str, ...]
    components: tuple[Expr, ...]
    name: str = ""
    time_dependent: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "components", tuple(as_expr(c) for c in self.components))
        if len(self.coords) != len(self.components):
            raise ValueError(f"{len(self.coords)} coordinates but {len(self.components)} components")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("duplicate coordinates")
        if TIME in self.coords:
            raise ValueError("time cannot be a coordinate")
        if not self.time_dependent and any(TIME in c.free_symbols for c in self.components):
            raise ValueError(f"field {self.name or '?'} mentions {TIME!r} but is not flagged time-dependent")

    @classmethod
    def from_dict(cls, coords: Sequence[str], comps: Mapping[str, Expr | float], **kw) -> "VectorField":
        unknown = set(comps) - set(coords)
        if unknown:
            raise CoordinateMismatch(f"components for unknown coordinates {sorted(unknown)}")
        return cls(tuple(coords), tuple(as_expr(comps.get(c, ZERO)) for c in coords), **kw)

    @classmethod
    def zero(cls, coords: Sequence[str]) -> "VectorField":
        return cls(tuple(coords), tuple(ZERO for _ in coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def free_symbols(self) -> frozenset[str]:
        out: set[str] = set()
        for c in self.components:
            out |= c.free_symbols
        return frozenset(out)

    @property
    def parameters(self) -> tuple[str, ...]:
        return tuple(sorted(self.free_symbols - set(self.coords) - {TIME}))

    def component(self, coord: str) -> Expr:
        return self.components[self.coords.index(coord)]

    def check_symbols(self, table: SymbolTable) -> None:
        missing = self.free_symbols - set(table)
        if missing:
            raise ValueError(f"undeclared symbols {sorted(missing)}")

    def apply(self, f: Expr) -> Expr:
        """Lie derivative of the scalar ``f`` along this field."""
        f = as_expr(f)
        fs = f.free_symbols
        return sum_exprs(mul(c, f.diff(x)) for x, c in zip(self.coords, self.components) if x in fs and c is not ZERO)

    def _like(self, components, name="", time_dependent=None) -> "VectorField":
        td = self.time_dependent if time_dependent is None else time_dependent
        return VectorField(self.coords, tuple(components), name=name, time_dependent=td)

    def _check_same(self, other: "VectorField"):
        if self.coords != other.coords:
            raise CoordinateMismatch(f"coordinate spaces differ: {self.coords} vs {other.coords}")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check_same(other)
        return self._like([add(a, b) for a, b in zip(self.components, other.components)],
                          time_dependent=self.time_dependent or other.time_dependent)

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check_same(other)
        return self._like([sub(a, b) for a, b in zip(self.components, other.components)],
                          time_dependent=self.time_dependent or other.time_dependent)

    def __neg__(self) -> "VectorField":
        return self._like([neg(a) for a in self.components])

    def scale(self, c) -> "VectorField":
        c = as_expr(c)
        td = self.time_dependent or TIME in c.free_symbols
        return self._like([mul(c, a) for a in self.components], time_dependent=td)

    def __rmul__(self, c) -> "VectorField":
        return self.scale(c)

    def subs(self, mapping: Mapping[str, Expr | float]) -> "VectorField":
        if any(k in self.coords for k in mapping):
            raise ValueError("cannot substitute coordinates; use rename")
        comps = [c.subs(mapping) for c in self.components]
        td = any(TIME in c.free_symbols for c in comps)
        return VectorField(self.coords, tuple(comps), name=self.name, time_dependent=td and self.time_dependent)

    def rename(self, mapping: Mapping[str, str]) -> "VectorField":
        from .expr import sym

        sub_map = {k: sym(v) for k, v in mapping.items()}
        coords = tuple(mapping.get(c, c) for c in self.coords)
        comps = tuple(c.subs(sub_map) for c in self.components)
        return VectorField(coords, comps, name=self.name, time_dependent=self.time_dependent)

    def numeric(self, args: Sequence[str], backend: str = "numpy"):
        return compile_exprs(self.components, args, backend)

    def evaluate(self, point: Mapping[str, float]) -> np.ndarray:
        from .expr import evaluate_many

        return np.array(evaluate_many(self.components, point))

    def is_zero(self, box=None, **kw) -> ZeroVerdict:
        return is_zero_probabilistic(list(self.components), box, **kw)

    def equals(self, other: "VectorField", box=None, **kw) -> ZeroVerdict:
        self._check_same(other)
        return (self - other).is_zero(box, **kw)

    def __str__(self) -> str:
        terms = [f"({to_string(c)})*d/d{x}" for x, c in zip(self.coords, self.components) if c is not ZERO]
        return " + ".join(terms) if terms else "0"

    def __repr__(self) -> str:
        label = f"{self.name}: " if self.name else ""
        return f"<VectorField {label}{self}>"


@dataclass(frozen=True, eq=False)
class TimeDepVectorField(VectorField):
    """Time-dependent field, optionally with ``sum_j b_j(t) X_j`` decomposition."""

    decomposition: tuple[tuple[Expr, VectorField], ...] | None = None
    time_dependent: bool = True

    def __post_init__(self):
        object.__setattr__(self, "time_dependent", True)
        super().__post_init__()
        if self.decomposition is not None:
            dec = []
            for coeff, fld in self.decomposition:
                coeff = as_expr(coeff)
                if coeff.free_symbols - {TIME}:
                    raise ValueError(f"decomposition coefficient {coeff} depends on more than {TIME!r}")
                if fld.coords != self.coords:
                    raise CoordinateMismatch("decomposition field lives on another space")
                dec.append((coeff, fld))
            object.__setattr__(self, "decomposition", tuple(dec))

    @classmethod
    def from_decomposition(cls, pairs: Iterable[tuple[Expr | float, VectorField]], name: str = "") -> "TimeDepVectorField":
        pairs = [(as_expr(c), f) for c, f in pairs]
        coords = pairs[0][1].coords
        comps = [sum_exprs(mul(c, f.components[i]) for c, f in pairs) for i in range(len(coords))]
        return cls(coords, tuple(comps), name=name, decomposition=tuple(pairs))

    def check_decomposition(self, box=None, **kw) -> ZeroVerdict:
        if self.decomposition is None:
            raise ValueError("no decomposition attached")
        total = [sum_exprs(mul(c, f.components[i]) for c, f in self.decomposition) for i in range(self.dim)]
        return is_zero_probabilistic([sub(a, b) for a, b in zip(self.components, total)], box, **kw)

    def plain(self) -> VectorField:
        return VectorField(self.coords, self.components, name=self.name, time_dependent=True)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y]^i = X(Y^i) - Y(X^i)``, unsimplified."""
    if X.coords != Y.coords:
        raise CoordinateMismatch(f"coordinate spaces differ: {X.coords} vs {Y.coords}")
    comps = tuple(sub(X.apply(yi), Y.apply(xi)) for xi, yi in zip(X.components, Y.components))
    td = X.time_dependent or Y.time_dependent
    name = f"[{X.name},{Y.name}]" if X.name and Y.name else ""
    return VectorField(X.coords, comps, name=name, time_dependent=td and any(TIME in c.free_symbols for c in comps))


def prolonged_coords(coords: Sequence[str], copies: int, first: int = 1) -> tuple[str, ...]:
    return tuple(copy_name(c, a) for a in range(first, first + copies) for c in coords)


def diagonal_prolongation(X: VectorField, copies: int, first: int = 1) -> VectorField:
    """Copy of ``X`` acting on each of ``copies`` replicas of its space.

    Replica ``a`` renames coordinate ``x`` to ``x_(a)``; ``a`` runs from
    ``first``. Parameters and time are shared between replicas.
    """
    if copies < 1:
        raise ValueError("copies must be at least 1")
    from .expr import sym

    coords: list[str] = []
    comps: list[Expr] = []
    for a in range(first, first + copies):
        mapping = {c: sym(copy_name(c, a)) for c in X.coords}
        coords.extend(copy_name(c, a) for c in X.coords)
        comps.extend(c.subs(mapping) for c in X.components)
    name = f"{X.name}^({copies})" if X.name else ""
    if isinstance(X, TimeDepVectorField):
        dec = None
        if X.decomposition is not None:
            dec = tuple((c, diagonal_prolongation(f, copies, first)) for c, f in X.decomposition)
        return TimeDepVectorField(tuple(coords), tuple(comps), name=name, decomposition=dec)
    return VectorField(tuple(coords), tuple(comps), name=name, time_dependent=X.time_dependent)


def freeze_time(X: VectorField, t0: float | Fraction) -> VectorField:
    """Field at the instant ``t0``; time-independent fields come back unchanged."""
    if not X.time_dependent:
        return X
    value = num(Fraction(t0) if isinstance(t0, (int, Fraction)) else float(t0))
    comps = tuple(c.subs({TIME: value}) for c in X.components)
    name = f"{X.name}|t={float(t0):g}" if X.name else ""
    return VectorField(X.coords, comps, name=name, time_dependent=False)


def linear_combination(coeffs: Sequence[Expr | float], fields: Sequence[VectorField]) -> VectorField:
    if not fields:
        raise ValueError("need at least one field")
    out = fields[0].scale(coeffs[0])
    for c, f in zip(coeffs[1:], fields[1:]):
        out = out + f.scale(c)
    return out
