"""Superposition rules as expression data."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from ..expr import TIME, Expr, copy_name, split_copy, sym

KINDS = ("first_order", "base", "quasi_base", "general", "partial")


class RuleError(ValueError):
    pass


@dataclass(eq=False)
class SuperpositionRule:
    """``x = Upsilon(p; k)`` written over copies ``1..m`` of the jet space.

    ``components`` are fully expanded (definitions, time functions and
    parameter values substituted) but still carry the branch symbols, each
    of which takes the values +1 and -1. Copy 0 is reserved for the target
    solution and may only appear in ``constraints`` and ``hints``.
    """

    name: str
    kind: str
    levels: tuple[tuple[str, ...], ...]
    m: int
    constants: tuple[str, ...]
    components: tuple[Expr, ...]
    branches: tuple[str, ...] = ()
    aux: Mapping[str, Expr] = field(default_factory=dict)
    constraints: tuple[Expr, ...] = ()
    k_box: tuple[tuple[float, float], ...] = ()
    hints: Mapping[str, Expr] = field(default_factory=dict)
    char_box: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    aux_form: tuple[Expr, ...] | None = None  # components with auxiliary integrals kept symbolic
    note: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RuleError(f"unknown rule kind {self.kind!r}")
        if self.m < 1:
            raise RuleError("a rule needs at least one particular solution")
        if not self.k_box:
            self.k_box = tuple((-5.0, 5.0) for _ in self.constants)
        if len(self.k_box) != len(self.constants):
            raise RuleError("k_box needs one interval per constant")
        expected = self.n * self.order if self.kind == "first_order" else self.n
        if len(self.components) != expected:
            raise RuleError(f"rule {self.name}: expected {expected} components, got {len(self.components)}")
        self.validate()

    # -- shape -------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.levels[0])

    @property
    def order(self) -> int:
        return len(self.levels)

    @property
    def p(self) -> int:
        return len(self.constants)

    @property
    def is_partial(self) -> bool:
        return self.kind == "partial"

    def copy_coords(self, a: int) -> tuple[str, ...]:
        return tuple(copy_name(x, a) for lv in self.levels for x in lv)

    @property
    def particular_coords(self) -> tuple[str, ...]:
        return tuple(c for a in range(1, self.m + 1) for c in self.copy_coords(a))

    @property
    def target_coords(self) -> tuple[str, ...]:
        return self.copy_coords(0)

    def branch_assignments(self) -> list[dict[str, int]]:
        return [dict(zip(self.branches, signs)) for signs in itertools.product((1, -1), repeat=len(self.branches))]

    def instantiate(self, branch: Mapping[str, int] | None = None) -> tuple[Expr, ...]:
        branch = branch or {}
        missing = set(self.branches) - set(branch)
        if missing:
            raise RuleError(f"no value for branch symbol(s) {sorted(missing)}")
        return tuple(c.subs({b: int(branch[b]) for b in self.branches}) for c in self.components)

    # -- structure checks ---------------------------------------------------
    def _higher_level_names(self) -> set[str]:
        return {x for lv in self.levels[1:] for x in lv}

    def _mentions_higher(self, exprs: Sequence[Expr]) -> bool:
        higher = self._higher_level_names()
        for e in exprs:
            for s in e.free_symbols:
                base, idx = split_copy(s)
                if idx is not None and base in higher:
                    return True
        return False

    def validate(self) -> None:
        free = set().union(*(c.free_symbols for c in self.components))
        if TIME in free:
            raise RuleError(f"rule {self.name} depends on time; a superposition rule must be t-free")
        allowed = set(self.particular_coords) | set(self.constants) | set(self.branches)
        extra = free - allowed
        if extra:
            raise RuleError(f"rule {self.name} mentions {sorted(extra)} beyond particular solutions and constants")
        if self.kind == "base" and self._mentions_higher(self.components):
            raise RuleError(f"base rule {self.name} must not use derivatives of the particular solutions")
        if self.kind == "quasi_base":
            if self.aux_form is None or not self.aux:
                raise RuleError(f"quasi-base rule {self.name} needs auxiliary integrals")
            if self._mentions_higher(self.aux_form):
                raise RuleError(f"quasi-base rule {self.name} may use derivatives only through its integrals")
        if self.kind == "partial" and self.p >= self.n * self.order:
            raise RuleError(f"partial rule {self.name} must have fewer than {self.n * self.order} constants")
        if self.kind in ("general", "base", "quasi_base") and self.p != self.n * self.order:
            raise RuleError(f"rule {self.name} of kind {self.kind} needs {self.n * self.order} constants")

    # -- transformations -----------------------------------------------------
    def swapped(self, i: int, j: int) -> "SuperpositionRule":
        """Rule with particular solutions ``i`` and ``j`` exchanged."""
        mapping = {}
        for a, b in ((i, j), (j, i)):
            for x, y in zip(self.copy_coords(a), self.copy_coords(b)):
                mapping[x] = sym(y)
        sw = lambda e: e.subs(mapping)  # noqa: E731
        return replace(
            self,
            name=f"{self.name}[{i}<->{j}]",
            components=tuple(sw(c) for c in self.components),
            aux={k: sw(v) for k, v in self.aux.items()},
            constraints=tuple(sw(c) for c in self.constraints),
            hints={k: sw(v) for k, v in self.hints.items()},
            aux_form=None if self.aux_form is None else tuple(sw(c) for c in self.aux_form),
        )


def project_hode_rule(rule: SuperpositionRule) -> SuperpositionRule:
    """Keep only the position block of a rule written on the full jet space."""
    if rule.kind != "first_order":
        return rule
    comps = rule.components[: rule.n]
    tmp = replace(rule, kind="general", components=comps, name=rule.name, aux_form=None)
    kind = "general" if tmp._mentions_higher(comps) else "base"
    return replace(tmp, kind=kind)
