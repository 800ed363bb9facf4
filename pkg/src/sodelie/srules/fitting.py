"""Fitting rule constants to initial data and reconstructing solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..expr import TIME, Expr, compile_exprs
from ..integrate import Trajectory
from ..sode import HodeSystem, build_XD_XL
from .rule import SuperpositionRule


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitConfig:
    starts: int = 16
    max_iter: int = 50
    tol: float = 1e-9
    fd_step: float = 1e-7
    early_exit: float = 1e-12


@dataclass
class FitResult:
    k: np.ndarray
    branch: dict[str, int]
    residual: float
    converged: bool
    starts_tried: int = 0
    candidates: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "k": [float(x) for x in self.k],
            "branch": dict(self.branch),
            "residual": float(self.residual),
            "converged": bool(self.converged),
        }


def total_derivative(XD, f: Expr) -> Expr:
    """``(d/dt + X_D) f`` with ``X_D`` time-dependent."""
    return XD.apply(f) + f.diff(TIME)


def rule_jets(rule: SuperpositionRule, system: HodeSystem, branch: Mapping[str, int] | None = None,
              upto: int | None = None) -> list[list[Expr]]:
    """``[u, Du, D^2 u, ...]`` with ``D = d/dt + X_D^{(m)}``, one list per order.

    For a first-order rule only the position block is differentiated.
    """
    comps = rule.instantiate(branch)[: rule.n]
    XD, _ = build_XD_XL(system, rule.m)
    upto = system.order if upto is None else upto
    jets = [list(comps)]
    for _ in range(1, upto):
        jets.append([total_derivative(XD, e) for e in jets[-1]])
    return jets


class _PhiMap:
    """``k -> (u, Du, ..., D^{s-1} u)`` at a fixed time and fixed particular data."""

    def __init__(self, rule: SuperpositionRule, system: HodeSystem, branch: Mapping[str, int]):
        jets = rule_jets(rule, system, branch)
        self.exprs = [e for level in jets for e in level]
        self.args = (TIME, *rule.particular_coords, *rule.constants)
        self.f = compile_exprs(self.exprs, self.args, "math")

    def __call__(self, t: float, p: Sequence[float], k: Sequence[float]) -> np.ndarray:
        return np.array(self.f(t, *p, *k), dtype=float)


def _newton(phi, target, k0, cfg: FitConfig):
    k = np.array(k0, dtype=float)

    def res(kk):
        return phi(kk) - target

    r = res(k)
    if not np.all(np.isfinite(r)):
        return k, np.inf
    nr = float(np.max(np.abs(r)))
    for _ in range(cfg.max_iter):
        if nr < cfg.early_exit:
            break
        J = np.empty((r.size, k.size))
        ok = True
        for j in range(k.size):
            h = cfg.fd_step * max(1.0, abs(k[j]))
            kp, km = k.copy(), k.copy()
            kp[j] += h
            km[j] -= h
            col = (res(kp) - res(km)) / (2 * h)
            if not np.all(np.isfinite(col)):
                ok = False
                break
            J[:, j] = col
        if not ok:
            break
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        alpha = 1.0
        improved = False
        while alpha > 1e-6:
            kn = k + alpha * step
            rn = res(kn)
            if np.all(np.isfinite(rn)):
                nrn = float(np.max(np.abs(rn)))
                if nrn < nr:
                    k, r, nr = kn, rn, nrn
                    improved = True
                    break
            alpha *= 0.5
        if not improved:
            break
    return k, nr


def fit_constants(
    rule: SuperpositionRule,
    system: HodeSystem,
    particular_state: Sequence[float],
    target_state: Sequence[float],
    t0: float = 0.0,
    *,
    rng: np.random.Generator | None = None,
    hint: Sequence[float] | None = None,
    config: FitConfig | None = None,
) -> FitResult:
    """Solve ``phi_p(k) = target`` by multi-start Newton, trying every branch.

    ``particular_state`` stacks the lifted states of copies ``1..m``;
    ``target_state`` is the lifted state of the solution to represent.
    """
    cfg = config or FitConfig()
    if rule.is_partial:
        raise FitError("partial rules do not determine their constants from initial data")
    rng = rng if rng is not None else np.random.default_rng(0)
    p = np.asarray(particular_state, dtype=float)
    target = np.asarray(target_state, dtype=float)
    lo = np.array([b[0] for b in rule.k_box])
    hi = np.array([b[1] for b in rule.k_box])
    starts = []
    if hint is not None and np.all(np.isfinite(hint)):
        starts.append(np.asarray(hint, dtype=float))
    starts.extend(rng.uniform(lo, hi) for _ in range(cfg.starts))
    best = None
    candidates = []
    tried = 0
    for branch in rule.branch_assignments():
        phi_map = _PhiMap(rule, system, branch)
        phi = lambda kk: phi_map(t0, p, kk)  # noqa: E731
        for k0 in starts:
            tried += 1
            k, r = _newton(phi, target, k0, cfg)
            if np.isfinite(r):
                candidates.append((r, k, branch))
                if best is None or r < best[0]:
                    best = (r, k, branch)
            if best is not None and best[0] < cfg.early_exit:
                break
    if best is None:
        raise FitError("no start produced a finite residual")
    r, k, branch = best
    return FitResult(k, dict(branch), r, r < cfg.tol, tried, candidates)


def _stack_particulars(particulars: Sequence[Trajectory], t_grid: np.ndarray) -> np.ndarray:
    return np.hstack([tr.sample(t_grid) for tr in particulars])


def reconstruct(
    rule: SuperpositionRule,
    k: Sequence[float],
    branch: Mapping[str, int] | None,
    particulars: Sequence[Trajectory],
    t_grid: Sequence[float],
    *,
    branch_policy: str = "fixed",
) -> tuple[np.ndarray, dict]:
    """Evaluate the rule along the particular solutions.

    Returns the ``(len(t_grid), n)`` positions and a diagnostics dict that
    records genericity violations and branch switches. With
    ``branch_policy="continuous"`` the sign branch at each grid time is the
    one closest to a linear extrapolation of the previous values.
    """
    if len(particulars) != rule.m:
        raise ValueError(f"rule needs {rule.m} particular solutions, got {len(particulars)}")
    t_grid = np.asarray(t_grid, dtype=float)
    P = _stack_particulars(particulars, t_grid)
    args = (*rule.particular_coords, *rule.constants)
    kk = [np.full(t_grid.shape, float(x)) for x in k]
    cols = [P[:, i] for i in range(P.shape[1])]

    def values(br):
        comps = rule.instantiate(br)[: rule.n]
        f = compile_exprs(comps, args, "numpy")
        return np.stack(f(*cols, *kk), axis=1)

    diag: dict = {"branch_switches": [], "constraint_violation_time": None}
    branch = dict(branch or {})
    if branch_policy == "fixed" or not rule.branches:
        out = values(branch)
    elif branch_policy == "continuous":
        options = rule.branch_assignments()
        vals = [values(b) for b in options]
        current = next(i for i, b in enumerate(options) if b == branch)
        out = np.empty_like(vals[0])
        out[0] = vals[current][0]
        for j in range(1, len(t_grid)):
            pred = out[j - 1] if j == 1 else 2 * out[j - 1] - out[j - 2]
            dist = [np.nanmax(np.abs(v[j] - pred)) if np.all(np.isfinite(v[j])) else np.inf for v in vals]
            choice = int(np.argmin(dist))
            if choice != current:
                diag["branch_switches"].append(float(t_grid[j]))
                current = choice
            out[j] = vals[current][j]
    else:
        raise ValueError(f"unknown branch policy {branch_policy!r}")

    own = [c for c in rule.constraints if not _mentions_copy(c, rule, 0)]
    if own:
        g = compile_exprs(own, args, "numpy")
        gv = np.stack(g(*cols, *kk), axis=1)
        bad = np.nonzero(~np.all(gv > 0, axis=1))[0]
        if bad.size:
            diag["constraint_violation_time"] = float(t_grid[bad[0]])
    return out, diag


def _mentions_copy(e: Expr, rule: SuperpositionRule, a: int) -> bool:
    names = set(rule.copy_coords(a))
    return bool(e.free_symbols & names)
