"""Explicit Runge-Kutta integration with dense output.

``rk45`` is the Dormand-Prince 5(4) pair with its quartic continuous
extension; ``rk4`` is the classical fixed-step method with cubic Hermite
interpolation between nodes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expr import TIME, Expr, compile_exprs
from .vfield import VectorField


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45"
    atol: float = 1e-10
    rtol: float = 1e-10
    h: float | None = None  # fixed step for rk4
    h0: float | None = None
    max_steps: int = 500_000
    min_step: float = 1e-13
    safety: float = 0.9
    fac_min: float = 0.2
    fac_max: float = 10.0

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.atol <= 0 or self.rtol < 0:
            raise ValueError("tolerances must be positive")


# Dormand-Prince coefficients
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# continuous extension: y(t + theta h) = y + h K^T P [theta, theta^2, theta^3, theta^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class Trajectory:
    """Accepted steps of an integration plus per-step interpolation data."""

    coords: tuple[str, ...]
    t: np.ndarray
    y: np.ndarray  # (len(t), dim)
    dense: list[tuple[str, np.ndarray]]
    method: str
    atol: float
    rtol: float
    nfev: int = 0
    status: str = "ok"  # ok | constraint-exit | nonfinite | step-underflow | max-steps
    exit_time: float | None = None
    message: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def t_span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def index(self, name: str) -> int:
        return self.coords.index(name)

    def __call__(self, t: float) -> np.ndarray:
        return self.dense_eval(t)

    def dense_eval(self, t: float) -> np.ndarray:
        """State at time ``t``; nodes return the stored state exactly."""
        t = float(t)
        t0, t1 = self.t[0], self.t[-1]
        if not (t0 <= t <= t1):
            raise ValueError(f"t={t} outside trajectory span [{t0}, {t1}]")
        k = int(np.searchsorted(self.t, t, side="left"))
        if k < len(self.t) and self.t[k] == t:
            return self.y[k].copy()
        i = k - 1
        ta, tb = self.t[i], self.t[i + 1]
        h = tb - ta
        theta = (t - ta) / h
        kind, data = self.dense[i]
        if kind == "dopri":
            ya, Q = data
            return ya + Q @ np.array([theta, theta**2, theta**3, theta**4])
        ya, yb, fa, fb = data
        h00 = (1 + 2 * theta) * (1 - theta) ** 2
        h10 = theta * (1 - theta) ** 2
        h01 = theta**2 * (3 - 2 * theta)
        h11 = theta**2 * (theta - 1)
        return h00 * ya + h10 * h * fa + h01 * yb + h11 * h * fb

    def sample(self, times: Sequence[float]) -> np.ndarray:
        return np.array([self.dense_eval(t) for t in times])

    def to_csv(self, times: Sequence[float] | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.coords])
        ts = self.t if times is None else times
        for t in ts:
            w.writerow([repr(float(t)), *(repr(float(v)) for v in self.dense_eval(t))])
        return buf.getvalue()


def make_rhs(X: VectorField, params: dict | None = None) -> Callable[[float, np.ndarray], np.ndarray]:
    comps = list(X.components)
    if params:
        comps = [c.subs(params) for c in comps]
    free = set().union(*(c.free_symbols for c in comps)) - set(X.coords) - {TIME}
    if free:
        raise IntegrationError(f"field still depends on unassigned symbols {sorted(free)}")
    f = compile_exprs(comps, (TIME, *X.coords), "math")

    def rhs(t, y):
        return np.array(f(t, *y), dtype=float)

    return rhs


def _constraint_fn(constraints: Sequence[Expr], coords: Sequence[str]):
    if not constraints:
        return None
    g = compile_exprs(list(constraints), (TIME, *coords), "math")

    def ok(t, y):
        vals = g(t, *y)
        return all(v > 0 for v in vals)  # NaN compares False

    return ok


def integrate_ivp(
    X: VectorField,
    y0: Sequence[float],
    t_span: tuple[float, float],
    method: str = "rk45",
    atol: float = 1e-10,
    rtol: float = 1e-10,
    *,
    h: float | None = None,
    constraints: Sequence[Expr] = (),
    config: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate ``dy/dt = X(t, y)`` from ``y0`` over ``t_span`` (forward only).

    Leaving the region where all ``constraints`` are positive stops the run
    with status ``constraint-exit``; the trajectory keeps the valid prefix.
    """
    cfg = config or IntegratorConfig(method=method, atol=atol, rtol=rtol, h=h)
    rhs = make_rhs(X)
    ok = _constraint_fn(constraints, X.coords)
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (X.dim,):
        raise ValueError(f"initial state has shape {y0.shape}, expected ({X.dim},)")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 <= t0:
        raise ValueError("t_span must be finite and increasing")
    if ok is not None and not ok(t0, y0):
        return Trajectory(X.coords, np.array([t0]), y0[None, :], [], cfg.method, cfg.atol, cfg.rtol,
                          status="constraint-exit", exit_time=t0, message="initial state violates constraints")
    if cfg.method == "rk4":
        return _rk4(rhs, ok, X.coords, y0, t0, t1, cfg)
    return _dopri(rhs, ok, X.coords, y0, t0, t1, cfg)


def _finish(coords, ts, ys, dense, cfg, nfev, status="ok", exit_time=None, message=""):
    return Trajectory(tuple(coords), np.array(ts), np.array(ys), dense, cfg.method, cfg.atol, cfg.rtol, nfev,
                      status, exit_time, message)


def _rk4(rhs, ok, coords, y0, t0, t1, cfg):
    h = cfg.h if cfg.h is not None else (t1 - t0) / 1000
    n = max(1, int(math.ceil((t1 - t0) / h - 1e-9)))
    h = (t1 - t0) / n
    ts, ys, dense = [t0], [y0], []
    y, t = y0, t0
    f0 = rhs(t, y)
    nfev = 1
    for i in range(n):
        k1 = f0
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t_new = t1 if i == n - 1 else t0 + (i + 1) * h
        f_new = rhs(t_new, y_new)
        nfev += 4
        if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(f_new)):
            return _finish(coords, ts, ys, dense, cfg, nfev, "nonfinite", t_new, "non-finite state or derivative")
        if ok is not None and not ok(t_new, y_new):
            return _finish(coords, ts, ys, dense, cfg, nfev, "constraint-exit", t_new, "left the constraint domain")
        dense.append(("hermite", (y, y_new, k1, f_new)))
        ts.append(t_new)
        ys.append(y_new)
        y, t, f0 = y_new, t_new, f_new
    return _finish(coords, ts, ys, dense, cfg, nfev)


def _initial_step(rhs, t0, y0, f0, cfg, span):
    sc = cfg.atol + cfg.rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / sc) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / sc) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / sc) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def _dopri(rhs, ok, coords, y0, t0, t1, cfg):
    t, y = t0, y0
    f = rhs(t, y)
    nfev = 1
    if not np.all(np.isfinite(f)):
        return _finish(coords, [t0], [y0], [], cfg, nfev, "nonfinite", t0, "non-finite derivative at start")
    h = cfg.h0 or _initial_step(rhs, t, y, f, cfg, t1 - t0)
    nfev += 1
    ts, ys, dense = [t0], [y0], []
    steps = 0
    while t < t1:
        if steps >= cfg.max_steps:
            return _finish(coords, ts, ys, dense, cfg, nfev, "max-steps", t, "step budget exhausted")
        if h < cfg.min_step * max(1.0, abs(t)):
            return _finish(coords, ts, ys, dense, cfg, nfev, "step-underflow", t, "step size underflow")
        last = t + h >= t1 - 1e-15 * max(1.0, abs(t1))
        if last:
            h = t1 - t
        k = [f]
        for s in range(1, 7):
            ys_ = y + h * sum(a * kk for a, kk in zip(_A[s], k) if a != 0.0)
            k.append(rhs(t + _C[s] * h, ys_))
        nfev += 6
        y_new = ys_  # stage 7 is evaluated at the 5th-order solution (FSAL)
        err_vec = h * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
        sc = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(all="ignore"):
            err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
        if not math.isfinite(err) or not np.all(np.isfinite(y_new)):
            h *= 0.25
            steps += 1
            continue
        if err <= 1.0:
            t_new = t1 if last else t + h
            if ok is not None and not ok(t_new, y_new):
                # shrink toward the boundary before giving up
                if h > 1e-6 * (t1 - t0):
                    h *= 0.5
                    steps += 1
                    continue
                return _finish(coords, ts, ys, dense, cfg, nfev, "constraint-exit", t_new,
                               "left the constraint domain")
            dense.append(("dopri", (y, h * (np.array(k).T @ _P))))
            ts.append(t_new)
            ys.append(y_new)
            t, y, f = t_new, y_new, k[6]
            fac = cfg.fac_max if err == 0 else min(cfg.fac_max, max(cfg.fac_min, cfg.safety * err ** -0.2))
            h *= fac
        else:
            h *= max(cfg.fac_min, cfg.safety * err ** -0.2)
        steps += 1
    return _finish(coords, ts, ys, dense, cfg, nfev)


def dense_eval(traj: Trajectory, t: float) -> np.ndarray:
    return traj.dense_eval(t)
