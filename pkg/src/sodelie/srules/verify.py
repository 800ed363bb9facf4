"""Numerical verification of superposition rules and first integrals."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import mpmath
import numpy as np

from ..expr import TIME, Expr, call, compile_exprs, copy_name, is_zero_probabilistic, sym
from ..expr.nodes import Div, Func, Pow, postorder
from ..expr.zerotest import sample_box
from ..integrate import IntegratorConfig, Trajectory, integrate_ivp
from ..sode import HodeSystem, build_XD_XL
from .catalog import CatalogEntry
from .fitting import FitConfig, FitError, fit_constants, reconstruct, rule_jets, total_derivative
from .rule import SuperpositionRule

GENERICITY_MARGIN = 0.1
MAX_ATTEMPTS = 60


@dataclass(frozen=True)
class VerifyConfig:
    trials: int = 20
    tol: float = 1e-6
    atol: float = 1e-10
    rtol: float = 1e-10
    n_grid: int = 201
    seed: int = 0
    branch_policy: str = "fixed"
    margin: float = GENERICITY_MARGIN
    fit: FitConfig = field(default_factory=FitConfig)


@dataclass
class VerificationReport:
    entry: str
    rule: str
    kind: str
    verdict: str
    trials: list[dict]
    tolerances: dict
    max_error: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return asdict(self)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


# -- sampling ---------------------------------------------------------------


class _StateSampler:
    """Draws initial data for several copies of an entry's system."""

    def __init__(self, entry: CatalogEntry, copies: Sequence[int], extra: Sequence[Expr] = (), margin: float = 0.1):
        self.entry = entry
        self.copies = tuple(copies)
        sysc = entry.system.resolved_constraints()
        checks = []
        for a in self.copies:
            mapping = {x: sym(copy_name(x, a)) for x in entry.system.state}
            checks.extend(c.expr.subs(mapping) for c in sysc)
        checks.extend(extra)
        self.names = tuple(copy_name(x, a) for a in self.copies for x in entry.system.state)
        self.checks = checks
        self.g = compile_exprs(checks, (TIME, *self.names), "math") if checks else None
        self.margin = margin

    def draw(self, rng: np.random.Generator, t0: float = 0.0) -> dict[int, np.ndarray] | None:
        for _ in range(MAX_ATTEMPTS * 10):
            states = {}
            flat = []
            for a in self.copies:
                s = np.array([rng.uniform(*self.entry.sampling_for(x)) for x in self.entry.system.state])
                states[a] = s
                flat.extend(s)
            if self.g is None or all(v > self.margin for v in self.g(t0, *flat)):
                return states
        return None


def _integrate(entry: CatalogEntry, y0, t_span, cfg: VerifyConfig) -> Trajectory:
    X = entry.system.to_first_order()
    cons = [c.expr for c in entry.system.resolved_constraints()]
    return integrate_ivp(X, y0, t_span, config=IntegratorConfig("rk45", cfg.atol, cfg.rtol), constraints=cons)


def _state_constraints(rule: SuperpositionRule) -> list[Expr]:
    return [c for c in rule.constraints if not (c.free_symbols & set(rule.constants))]


# -- superposition -----------------------------------------------------------


def verify_superposition(
    entry: CatalogEntry,
    rule: SuperpositionRule | str | None = None,
    trials: int | None = None,
    t_span: tuple[float, float] | None = None,
    tol: float | None = None,
    *,
    config: VerifyConfig | None = None,
) -> VerificationReport:
    """Seeded trials comparing rule reconstructions with direct integration.

    General rules fit their constants to a random target's initial jet;
    partial rules draw constants from ``k_box`` and check that the
    reconstruction agrees with the solution integrated from its own jet.
    """
    cfg = config or VerifyConfig()
    if trials is not None or tol is not None:
        cfg = VerifyConfig(**{**asdict(cfg), "fit": cfg.fit,
                              "trials": trials if trials is not None else cfg.trials,
                              "tol": tol if tol is not None else cfg.tol})
    if not isinstance(rule, SuperpositionRule):
        rule = entry.rule(rule)
    t_span = tuple(t_span or entry.t_span)
    t_grid = np.linspace(t_span[0], t_span[1], cfg.n_grid)
    records = []
    worst = 0.0
    failed = False
    for i in range(cfg.trials):
        rec = _run_trial(entry, rule, t_span, t_grid, cfg, i)
        records.append(rec)
        if rec["status"] != "ok" or not (rec["max_error"] < cfg.tol):
            failed = True
        if np.isfinite(rec.get("max_error", np.inf)):
            worst = max(worst, rec["max_error"])
        else:
            worst = float("inf")
    verdict = "fail" if failed else "pass"
    tolerances = {"reconstruction": cfg.tol, "fit_residual": cfg.fit.tol, "atol": cfg.atol, "rtol": cfg.rtol,
                  "margin": cfg.margin}
    return VerificationReport(entry.name, rule.name, rule.kind, verdict, records, tolerances, worst,
                              {"t_span": list(t_span), "branch_policy": cfg.branch_policy, "seed": cfg.seed})


def _run_trial(entry, rule, t_span, t_grid, cfg, index, keep: dict | None = None) -> dict:
    rng = trial_rng(cfg.seed, index)
    partial = rule.is_partial
    copies = list(range(1, rule.m + 1)) if partial else list(range(0, rule.m + 1))
    sampler = _StateSampler(entry, copies, _state_constraints(rule), cfg.margin)
    rec: dict = {"index": index, "seed": [cfg.seed, index]}
    for attempt in range(1, MAX_ATTEMPTS + 1):
        states = sampler.draw(rng, t_span[0])
        if states is None:
            rec.update(status="sampling-failed", max_error=float("inf"))
            return rec
        trajs = {a: _integrate(entry, s, t_span, cfg) for a, s in states.items()}
        if all(tr.ok for tr in trajs.values()):
            break
    else:
        rec.update(status="integration-failed", max_error=float("inf"))
        return rec
    rec["attempts"] = attempt
    rec["initial_data"] = {str(a): [float(v) for v in s] for a, s in states.items()}
    particulars = [trajs[a] for a in range(1, rule.m + 1)]
    p0 = np.concatenate([states[a] for a in range(1, rule.m + 1)])

    if partial:
        k = np.array([rng.uniform(lo, hi) for lo, hi in rule.k_box])
        branch = rule.branch_assignments()[0]
        jets = rule_jets(rule, entry.system, branch)
        f = compile_exprs([e for lv in jets for e in lv], (TIME, *rule.particular_coords, *rule.constants), "math")
        y0 = np.array(f(t_span[0], *p0, *k), dtype=float)
        ref = _integrate(entry, y0, t_span, cfg)
        rec["k"] = [float(x) for x in k]
        rec["branch"] = branch
        rec["reference_initial_state"] = [float(v) for v in y0]
        if not ref.ok:
            rec.update(status="reference-integration-failed", max_error=float("inf"), message=ref.message)
            return rec
    else:
        hint = None
        if rule.hints:
            data = {copy_name(x, a): float(v) for a, s in states.items() for x, v in zip(entry.system.state, s)}
            hint_exprs = [rule.hints.get(c) for c in rule.constants]
            if all(h is not None for h in hint_exprs):
                names = tuple(sorted(set().union(*(h.free_symbols for h in hint_exprs)) - {TIME}))
                g = compile_exprs(hint_exprs, (TIME, *names), "math")
                hint = np.array(g(t_span[0], *(data[nm] for nm in names)), dtype=float)
        try:
            fit = fit_constants(rule, entry.system, p0, states[0], t_span[0], rng=rng, hint=hint, config=cfg.fit)
        except FitError as exc:
            rec.update(status="no-root", max_error=float("inf"), message=str(exc))
            return rec
        rec["fit"] = fit.to_dict()
        if hint is not None:
            rec["hint"] = [float(v) for v in hint]
        k, branch = fit.k, fit.branch
        ref = trajs[0]
        if not fit.converged:
            rec.update(status="no-root", max_error=float("inf"))
            return rec
    recon, diag = reconstruct(rule, k, branch, particulars, t_grid, branch_policy=cfg.branch_policy)
    reference = ref.sample(t_grid)[:, : rule.n]
    err = np.abs(recon - reference)
    max_err = float(np.max(err)) if np.all(np.isfinite(err)) else float("inf")
    rec.update(status="ok", max_error=max_err, **diag)
    if keep is not None:
        keep.update(t=t_grid, reference=reference, reconstructed=recon)
    return rec


def reconstruction_series(entry: CatalogEntry, rule: SuperpositionRule | str | None = None, index: int = 0, *,
                          t_span: tuple[float, float] | None = None, config: VerifyConfig | None = None
                          ) -> tuple[dict, dict]:
    """Trial ``index`` of ``verify_superposition`` with its sampled curves.

    Returns the trial record and ``{"t", "reference", "reconstructed"}``
    (empty when the trial failed before reconstruction).
    """
    cfg = config or VerifyConfig()
    if not isinstance(rule, SuperpositionRule):
        rule = entry.rule(rule)
    t_span = tuple(t_span or entry.t_span)
    t_grid = np.linspace(t_span[0], t_span[1], cfg.n_grid)
    keep: dict = {}
    rec = _run_trial(entry, rule, t_span, t_grid, cfg, index, keep)
    return rec, keep


# -- first integrals -----------------------------------------------------------


@dataclass
class DriftReport:
    entry: str
    integral: str
    verdict: str
    annihilation: str
    trials: list[dict]
    max_drift: float
    tolerances: dict

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return asdict(self)


def integral_annihilation(entry: CatalogEntry, name: str, *, seed: int = 0, box=None) -> str:
    """Zero-test ``(d/dt + X_D) I`` on the copies that ``I`` uses."""
    integ = entry.integrals[name]
    first, count = integ.copies[0], integ.copies[-1] - integ.copies[0] + 1
    XD, _ = build_XD_XL(entry.system, count, first)
    e = total_derivative(XD, integ.expr)
    # the same margin that trial sampling uses keeps points off the singular set
    where = [w - GENERICITY_MARGIN for w in integ.valid_when]
    v = is_zero_probabilistic(e, box or entry.box, seed=seed, where=where)
    return v.verdict


def check_first_integral_conservation(
    entry: CatalogEntry,
    integral_name: str,
    trials: int = 20,
    t_span: tuple[float, float] | None = None,
    tol: float = 1e-7,
    *,
    seed: int = 0,
    atol: float = 1e-10,
    rtol: float = 1e-10,
    n_grid: int = 201,
) -> DriftReport:
    """Relative drift ``max |I(t) - I(0)| / max(1, |I(0)|)`` along integrated solutions.

    While a ``valid_when`` condition fails the integral is not expected to
    be constant, so the drift is measured up to the first such time.
    """
    if integral_name not in entry.integrals:
        raise KeyError(f"entry {entry.name!r} has no integral {integral_name!r}")
    integ = entry.integrals[integral_name]
    cfg = VerifyConfig(trials=trials, tol=tol, atol=atol, rtol=rtol, n_grid=n_grid, seed=seed)
    t_span = tuple(t_span or entry.t_span)
    t_grid = np.linspace(t_span[0], t_span[1], n_grid)
    names = tuple(copy_name(x, a) for a in integ.copies for x in entry.system.state)
    f = compile_exprs([integ.expr, *integ.valid_when], (TIME, *names), "numpy")
    sampler = _StateSampler(entry, integ.copies, list(integ.valid_when), GENERICITY_MARGIN)
    records = []
    worst = 0.0
    failed = False
    for i in range(trials):
        rng = trial_rng(seed, i)
        rec: dict = {"index": i, "seed": [seed, i]}
        trajs = None
        for attempt in range(1, MAX_ATTEMPTS + 1):
            states = sampler.draw(rng, t_span[0])
            if states is None:
                break
            trajs = [_integrate(entry, states[a], t_span, cfg) for a in integ.copies]
            if all(tr.ok for tr in trajs):
                break
            trajs = None
        if trajs is None:
            rec.update(status="sampling-failed", drift=float("inf"))
            records.append(rec)
            failed = True
            worst = float("inf")
            continue
        P = np.hstack([tr.sample(t_grid) for tr in trajs])
        vals = f(t_grid, *(P[:, j] for j in range(P.shape[1])))
        I = np.asarray(vals[0])
        valid = np.ones_like(I, dtype=bool)
        for w in vals[1:]:
            valid &= np.asarray(w) > 0
        stop = len(I) if valid.all() else int(np.argmin(valid))
        I0 = I[0]
        seg = I[:stop]
        drift = float(np.max(np.abs(seg - I0)) / max(1.0, abs(I0))) if np.all(np.isfinite(seg)) else float("inf")
        rec.update(status="ok", attempts=attempt, initial_value=float(I0), drift=drift,
                   valid_until=float(t_grid[stop - 1]),
                   initial_data={str(a): [float(v) for v in states[a]] for a in integ.copies})
        records.append(rec)
        worst = max(worst, drift)
        if not drift < tol:
            failed = True
    ann = integral_annihilation(entry, integral_name, seed=seed)
    verdict = "fail" if failed or ann == "nonzero" else "pass"
    return DriftReport(entry.name, integral_name, verdict, ann, records, worst,
                       {"drift": tol, "atol": atol, "rtol": rtol, "zero_test": 1e-9})


# -- characteristic residual --------------------------------------------------


@dataclass
class CharResidual:
    max_residual: float
    max_scaled: float
    samples: int
    verdict: str  # "ok" | "inconclusive"

    def to_dict(self) -> dict:
        return asdict(self)


def _char_jets(S: HodeSystem, u: Sequence[Expr], m: int) -> tuple[dict[str, Expr], list[Expr]]:
    XD, XL = build_XD_XL(S, m)
    u = list(u)
    if S.order == 2:
        du = [XD.apply(e) for e in u]
        lhs = [XD.apply(d) + XL.apply(e) for d, e in zip(du, u)]
        jets = [u, du]
    else:
        jets = [u]
        for _ in range(1, S.order):
            jets.append([total_derivative(XD, e) for e in jets[-1]])
        lhs = [total_derivative(XD, e) for e in jets[-1]]
    mapping = {name: jets[j][i] for j, level in enumerate(S.levels) for i, name in enumerate(level)}
    return mapping, lhs


def char_residual_exprs(S: HodeSystem, u: Sequence[Expr], m: int) -> list[Expr]:
    """Symbolic residual of the characteristic system for ``u_k``.

    For second order this is ``X_D^2 u + X_L u - F(t, u, X_D u)``;
    higher orders use ``D^s u - F(t, u, ..., D^{s-1} u)`` with
    ``D = d/dt + X_D``, which agrees with the former for time-free ``u``.
    """
    mapping, lhs = _char_jets(S, u, m)
    rhs = [F.subs(mapping) for F in S.F]
    return [a - b for a, b in zip(lhs, rhs)]


def domain_guards(S: HodeSystem, u: Sequence[Expr], m: int, margin: float = GENERICITY_MARGIN) -> list[Expr]:
    """The system's own constraints evaluated on the jet of ``u``, with ``margin``."""
    mapping, _ = _char_jets(S, u, m)
    return [c.expr.subs(mapping) - margin for c in S.resolved_constraints()]


def singular_guards(exprs: Sequence[Expr], margin: float = GENERICITY_MARGIN) -> list[Expr]:
    """Conditions ``g > 0`` keeping sample points ``margin`` away from where ``exprs`` are singular.

    Radicands, logarithm arguments and bases of fractional powers must exceed
    ``margin``; denominators must exceed it in absolute value.
    """
    out = []
    for node in postorder(exprs):
        if isinstance(node, Func) and node.name in ("sqrt", "ln"):
            out.append(node.children[0] - margin)
        elif isinstance(node, Pow) and node.exp.denominator != 1:
            out.append(node.children[0] - margin)
        elif isinstance(node, Div) and node.children[1].free_symbols:
            out.append(call("abs", node.children[1]) - margin)
    return out


def char_residual(
    S: HodeSystem,
    u: Sequence[Expr],
    m: int,
    box: Mapping[str, tuple[float, float]] | None = None,
    samples: int = 64,
    *,
    seed: int = 0,
    where: Sequence[Expr] = (),
    derive: Mapping[str, Expr] | None = None,
    max_rounds: int = 20,
    dps: int = 40,
) -> CharResidual:
    """Largest residual of the characteristic PDE at random ``(t, p, k)``.

    Points are screened in float64; the residual is then recomputed at the
    accepted points with ``dps`` decimal digits, so cancellation near
    singular sets does not masquerade as a defect.  ``derive`` maps some
    names (typically the constants) to expressions in other sampled names.
    """
    from ..expr.zerotest import additive_terms

    derive = dict(derive or {})
    res = char_residual_exprs(S, u, m)
    terms = [t for r in res for t in additive_terms(r)]
    exprs = res + terms + list(where)
    names = sorted(set().union(*(e.free_symbols for e in exprs)))
    base = sorted((set(names) - derive.keys()).union(*(derive[n].free_symbols for n in names if n in derive)))
    dnames = [n for n in names if n in derive]
    g = compile_exprs([derive[n] for n in dnames], base, "numpy") if dnames else None
    f = compile_exprs(exprs, names, "numpy")
    f_hi = compile_exprs(res, names, "mpmath")
    g_hi = compile_exprs([derive[n] for n in dnames], base, "mpmath") if dnames else None
    rng = np.random.default_rng(seed)
    n_draw = 4 * samples
    got = 0
    worst = 0.0
    worst_scaled = 0.0
    for _ in range(max_rounds):
        pts = sample_box(base, n_draw, rng, box)
        pts = {k: np.broadcast_to(np.asarray(v, dtype=float), (n_draw,)) for k, v in pts.items()}
        if g is not None:
            for n, v in zip(dnames, g(*(pts[b] for b in base))):
                pts[n] = np.broadcast_to(v, (n_draw,))
        vals = np.array([np.broadcast_to(v, (n_draw,)) for v in f(*(pts[nm] for nm in names))])
        r = vals[: len(res)]
        tv = vals[len(res): len(res) + len(terms)]
        ok = np.all(np.isfinite(r), axis=0) & np.all(np.isfinite(tv), axis=0)
        if where:
            ok &= np.all(vals[len(res) + len(terms):] > 0, axis=0)
        for i in np.nonzero(ok)[0][: samples - got]:
            with mpmath.workdps(dps):
                point = {b: mpmath.mpf(float(pts[b][i])) for b in base}
                if g_hi is not None:
                    point.update(zip(dnames, g_hi(*(point[b] for b in base))))
                a = max(abs(v) for v in f_hi(*(point[nm] for nm in names)))
            a = float(a)
            if not math.isfinite(a):
                continue
            scale = max(1.0, float(np.max(np.abs(tv[:, i]))))
            worst = max(worst, a)
            worst_scaled = max(worst_scaled, a / scale)
            got += 1
        if got >= samples:
            return CharResidual(worst, worst_scaled, got, "ok")
    return CharResidual(worst, worst_scaled, got, "inconclusive")


def rule_char_residual(entry: CatalogEntry, rule: SuperpositionRule | str, samples: int = 64, *, seed: int = 0
                       ) -> dict[str, CharResidual]:
    """``char_residual`` for every sign branch of a catalog rule."""
    if not isinstance(rule, SuperpositionRule):
        rule = entry.rule(rule)
    # copies of a state coordinate fall back to the region trials draw from
    sampling = {x: entry.sampling_for(x) for x in entry.system.state}
    box = {**sampling, **entry.box, **rule.char_box}
    # constants realised by an actual solution through the reference copy
    derive = rule.hints if set(rule.hints) >= set(rule.constants) and not rule.is_partial else None
    out = {}
    for br in rule.branch_assignments():
        u = rule.instantiate(br)[: rule.n]
        where = _state_constraints(rule) + singular_guards(u) + domain_guards(entry.system, u, rule.m)
        label = ",".join(f"{k}={v:+d}" for k, v in br.items()) or "-"
        out[label] = char_residual(entry.system, u, rule.m, box, samples, seed=seed, where=where, derive=derive)
    return out


# -- X_L annihilation -----------------------------------------------------------


def check_XL_annihilates(S: HodeSystem, rule: SuperpositionRule, *, box=None, seed: int = 0) -> dict:
    """Zero-test ``X_L^{(m)}`` applied to the position block of ``rule``."""
    for c in rule.components:
        if TIME in c.free_symbols:
            return {"verdict": "no", "reason": "rule depends on t", "witness": None}
    _, XL = build_XD_XL(S, rule.m)
    for br in rule.branch_assignments():
        exprs = [XL.apply(c) for c in rule.instantiate(br)[: rule.n]]
        v = is_zero_probabilistic(exprs, box, seed=seed)
        if v.verdict == "nonzero":
            return {"verdict": "no", "reason": "X_L does not annihilate the rule", "witness": v.witness,
                    "branch": br}
        if v.verdict == "inconclusive":
            return {"verdict": "inconclusive", "reason": "too few finite samples", "witness": None, "branch": br}
    return {"verdict": "yes", "reason": "", "witness": None}
