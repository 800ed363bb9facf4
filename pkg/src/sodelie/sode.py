"""Second- and higher-order ODE systems, their first-order lifts and the X_D / X_L fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .expr import TIME, ZERO, Expr, SymbolTable, as_expr, sym
from .liealg import LieCheck, lie_scheffers_check
from .vfield import TimeDepVectorField, VectorField, diagonal_prolongation


@dataclass(frozen=True)
class Constraint:
    """Open condition ``expr > 0`` on a state (or a tuple of states)."""

    expr: Expr
    label: str = ""

    def __str__(self):
        return self.label or f"{self.expr} > 0"


@dataclass(frozen=True, eq=False)
class HodeSystem:
    """``x^{(s)} = F(t, x, x', ..., x^{(s-1)})`` for an ``n``-vector ``x``.

    ``levels[j]`` holds the names of the ``j``-th derivatives, so
    ``levels[0]`` are the positions and ``len(levels) == order``. ``rhs``
    may mention parameters and time functions by name; ``F`` has them
    substituted.
    """

    levels: tuple[tuple[str, ...], ...]
    rhs: tuple[Expr, ...]
    parameters: Mapping[str, Expr] = field(default_factory=dict)
    functions: Mapping[str, Expr] = field(default_factory=dict)
    constraints: tuple[Constraint, ...] = ()
    name: str = ""
    decomposition: tuple[tuple[Expr, VectorField], ...] | None = None

    def __post_init__(self):
        levels = tuple(tuple(lv) for lv in self.levels)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "rhs", tuple(as_expr(e) for e in self.rhs))
        n = len(levels[0])
        if any(len(lv) != n for lv in levels):
            raise ValueError("every derivative level needs one name per position")
        if len(self.rhs) != n:
            raise ValueError(f"{n} positions but {len(self.rhs)} right-hand sides")
        allowed = set(self.symbols)
        for e in self.rhs:
            extra = e.free_symbols - allowed
            if extra:
                raise ValueError(f"right-hand side mentions undeclared {sorted(extra)}")

    @property
    def n(self) -> int:
        return len(self.levels[0])

    @property
    def order(self) -> int:
        return len(self.levels)

    @property
    def positions(self) -> tuple[str, ...]:
        return self.levels[0]

    @property
    def state(self) -> tuple[str, ...]:
        """Coordinates of the first-order lift, level by level."""
        return tuple(name for lv in self.levels for name in lv)

    @property
    def top(self) -> tuple[str, ...]:
        return self.levels[-1]

    @property
    def symbols(self) -> SymbolTable:
        roles = {"coordinate": self.levels[0]}
        if self.order >= 2:
            roles["velocity"] = self.levels[1]
        roles["derivative"] = [n for lv in self.levels[2:] for n in lv]
        roles["parameter"] = list(self.parameters)
        roles["function"] = list(self.functions)
        return SymbolTable.build(**roles)

    def resolve(self, e: Expr) -> Expr:
        """Substitute time functions and parameter values into ``e``."""
        if self.functions:
            e = e.subs(self.functions)
            # function definitions may themselves use parameters
        if self.parameters:
            e = e.subs(self.parameters)
        return e

    @property
    def F(self) -> tuple[Expr, ...]:
        return tuple(self.resolve(e) for e in self.rhs)

    @property
    def autonomous(self) -> bool:
        return all(TIME not in f.free_symbols for f in self.F)

    def resolved_constraints(self) -> tuple[Constraint, ...]:
        return tuple(Constraint(self.resolve(c.expr), c.label) for c in self.constraints)

    def to_first_order(self) -> TimeDepVectorField:
        comps: list[Expr] = []
        for j in range(self.order - 1):
            comps.extend(sym(n) for n in self.levels[j + 1])
        comps.extend(self.F)
        dec = None
        if self.decomposition is not None:
            dec = tuple((self.resolve(c), f.subs(self.parameters) if self.parameters else f)
                        for c, f in self.decomposition)
        return TimeDepVectorField(self.state, tuple(comps), name=self.name or "X", decomposition=dec)


class SodeSystem(HodeSystem):
    """Second-order system with positions ``x`` and velocities ``v``."""

    @classmethod
    def make(cls, positions: Sequence[str], velocities: Sequence[str], rhs: Sequence[Expr], **kw) -> "SodeSystem":
        return cls((tuple(positions), tuple(velocities)), tuple(rhs), **kw)

    def __post_init__(self):
        super().__post_init__()
        if self.order != 2:
            raise ValueError("a SODE has exactly two levels")

    @property
    def velocities(self) -> tuple[str, ...]:
        return self.levels[1]


def to_first_order(S: HodeSystem) -> TimeDepVectorField:
    return S.to_first_order()


def drift_field(S: HodeSystem) -> VectorField:
    """``X_D``: the lift read as a field on the state space, time kept as a parameter."""
    X = S.to_first_order()
    return VectorField(X.coords, X.components, name="X_D", time_dependent=True)


def time_derivative_field(S: HodeSystem) -> VectorField:
    """``X_L = sum_i dF^i/dt d/d(top_i)``."""
    comps: list[Expr] = [ZERO] * (len(S.state) - S.n) + [f.diff(TIME) for f in S.F]
    td = any(TIME in c.free_symbols for c in comps)
    return VectorField(S.state, tuple(comps), name="X_L", time_dependent=td)


def build_XD_XL(S: HodeSystem, m: int, first: int = 1) -> tuple[VectorField, VectorField]:
    """``(X_D^{(m)}, X_L^{(m)})`` prolonged onto copies ``first .. first+m-1``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    XD = diagonal_prolongation(drift_field(S), m, first)
    XL = diagonal_prolongation(time_derivative_field(S), m, first)
    return (
        VectorField(XD.coords, XD.components, name=f"X_D^({m})", time_dependent=True),
        VectorField(XL.coords, XL.components, name=f"X_L^({m})", time_dependent=True),
    )


def is_sode_lie_system(
    S: HodeSystem,
    cap: int = 12,
    max_depth: int = 5,
    box=None,
    *,
    time_samples: Sequence[float] | None = None,
    seed: int | None = 0,
) -> LieCheck:
    return lie_scheffers_check(S.to_first_order(), time_samples, cap, max_depth, box, seed=seed)
