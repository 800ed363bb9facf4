"""Numerical Lie-algebra closure and rank tests on sampled points."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .expr import TIME, compile_exprs
from .expr.zerotest import Box, sample_box
from .vfield import TimeDepVectorField, VectorField, diagonal_prolongation, freeze_time, lie_bracket


class SamplingError(RuntimeError):
    """Too few finite evaluations to decide anything."""


@dataclass(frozen=True)
class ClosureConfig:
    cap: int = 12
    max_depth: int = 5
    membership_tol: float = 1e-7
    rank_rtol: float = 1e-8
    min_points: int = 16
    points_per_dim: int = 4


@dataclass
class ClosureResult:
    status: str  # "closed" | "exceeded" | "inconclusive"
    dimension: int
    basis: list[VectorField]
    structure_constants: np.ndarray | None
    bracket_depth_reached: int
    sample_points_used: int
    cap: int
    max_depth: int
    max_membership_residual: float = 0.0
    message: str = ""

    @property
    def closed(self) -> bool:
        return self.status == "closed"

    def to_dict(self) -> dict:
        d = {
            "status": self.status,
            "dimension": self.dimension,
            "bracket_depth_reached": self.bracket_depth_reached,
            "sample_points_used": self.sample_points_used,
            "cap": self.cap,
            "max_depth": self.max_depth,
            "max_membership_residual": self.max_membership_residual,
        }
        if self.status == "exceeded":
            d["dimension_lower_bound"] = self.dimension
        if self.structure_constants is not None:
            d["structure_constants"] = structure_constant_table(self.structure_constants)
        if self.message:
            d["message"] = self.message
        return d


def structure_constant_table(c: np.ndarray, tol: float = 1e-12) -> list[dict]:
    """Nonzero ``c[a, b, g]`` with ``a < b`` as ``{"pair": [a+1, b+1], "coefficients": [...]}``."""
    d = c.shape[0]
    out = []
    for a in range(d):
        for b in range(a + 1, d):
            coeffs = [0.0 if abs(x) < tol else float(x) for x in c[a, b]]
            out.append({"pair": [a + 1, b + 1], "coefficients": coeffs})
    return out


class PointSampler:
    """Shared random sample points for a family of fields on one space."""

    def __init__(self, names: Sequence[str], count: int, box: Box | None = None, seed: int | None = 0,
                 rng: np.random.Generator | None = None):
        self.names = tuple(names)
        self.count = count
        self.box = box
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.points = sample_box(self.names, count, self.rng, box)

    def evaluate(self, X: VectorField) -> np.ndarray:
        """``(count, dim)`` array of component values."""
        f = compile_exprs(X.components, self.names, "numpy")
        vals = f(*(self.points[n] for n in self.names))
        return np.stack([np.broadcast_to(np.asarray(v, float), (self.count,)) for v in vals], axis=1)

    def stacked(self, fields: Sequence[VectorField]) -> np.ndarray:
        """Columns are fields; rows run over (point, component)."""
        if not fields:
            return np.zeros((0, 0))
        return np.stack([self.evaluate(X).reshape(-1) for X in fields], axis=1)


def _space_names(fields: Sequence[VectorField]) -> list[str]:
    names = set()
    for X in fields:
        names |= set(X.coords) | X.free_symbols
    return sorted(names)


def numerical_rank(M: np.ndarray, rtol: float = 1e-8) -> tuple[int, np.ndarray]:
    if M.size == 0:
        return 0, np.zeros(0)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0, s
    return int(np.sum(s > rtol * s[0])), s


@dataclass
class RankResult:
    rank: int
    singular_values: np.ndarray
    sample_points: int
    mode: str

    def __int__(self):
        return self.rank


def rank_at_samples(
    fields: Sequence[VectorField],
    sample_count: int | None = None,
    box: Box | None = None,
    *,
    seed: int | None = 0,
    mode: str = "stacked",
    rtol: float = 1e-8,
) -> RankResult:
    """Numerical rank of ``fields``.

    ``stacked`` measures independence over the reals (constant
    coefficients); ``pointwise`` measures the rank of the distribution at a
    generic point, taking the largest rank seen over the samples.
    """
    fields = list(fields)
    if not fields:
        return RankResult(0, np.zeros(0), 0, mode)
    if sample_count is None:
        sample_count = max(len(fields), 8)
    if sample_count < len(fields) and mode == "stacked":
        raise ValueError("sample_count must be at least the number of fields")
    sampler = PointSampler(_space_names(fields), sample_count * 4, box, seed)
    vals = [sampler.evaluate(X) for X in fields]  # each (N, dim)
    finite = np.all([np.all(np.isfinite(v), axis=1) for v in vals], axis=0)
    idx = np.nonzero(finite)[0][:sample_count]
    if idx.size < min(sample_count, max(len(fields), 1)):
        raise SamplingError(f"only {idx.size} finite sample points out of {sampler.count}")
    if mode == "stacked":
        M = np.stack([v[idx].reshape(-1) for v in vals], axis=1)
        r, s = numerical_rank(M, rtol)
        return RankResult(r, s, int(idx.size), mode)
    if mode == "pointwise":
        best, best_s = 0, np.zeros(0)
        for j in idx:
            M = np.stack([v[j] for v in vals], axis=1)
            r, s = numerical_rank(M, rtol)
            if r > best:
                best, best_s = r, s
        return RankResult(best, best_s, int(idx.size), mode)
    raise ValueError(f"unknown rank mode {mode!r}")


@dataclass
class Membership:
    coefficients: np.ndarray
    residual: float

    def within(self, tol: float) -> bool:
        return self.residual <= tol


def _lstsq_member(b: np.ndarray, A: np.ndarray) -> Membership:
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    if A.shape[1] == 0:
        return Membership(np.zeros(0), 0.0 if scale == 0.0 else 1.0)
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    coeffs, *_ = np.linalg.lstsq(A / norms, b, rcond=None)
    coeffs = coeffs / norms
    if scale == 0.0:
        return Membership(coeffs, 0.0)
    resid = float(np.max(np.abs(A @ coeffs - b))) / scale
    return Membership(coeffs, resid)


def span_membership(
    candidate: VectorField,
    basis: Sequence[VectorField],
    box: Box | None = None,
    *,
    sample_count: int | None = None,
    seed: int | None = 0,
) -> Membership:
    """Constant coefficients ``c`` minimising ``candidate - sum c_j basis_j`` at sample points.

    The residual is the largest pointwise deviation divided by the largest
    candidate component value.
    """
    fields = list(basis) + [candidate]
    n = sample_count or max(4 * len(fields), 16)
    sampler = PointSampler(_space_names(fields), 4 * n, box, seed)
    M = sampler.stacked(fields)
    rows = M.reshape(sampler.count, -1, len(fields))
    good = np.all(np.isfinite(rows), axis=(1, 2))
    idx = np.nonzero(good)[0][:n]
    if idx.size < max(len(basis), 1):
        raise SamplingError("too few finite sample points for membership")
    sub = rows[idx].reshape(-1, len(fields))
    return _lstsq_member(sub[:, -1], sub[:, :-1])


class _Workspace:
    """Incrementally maintained numeric images of basis fields at fixed points."""

    def __init__(self, names, n_points, box, seed, rng=None):
        self.sampler = PointSampler(names, n_points * 4, box, seed, rng)
        self.target = n_points
        self.columns: list[np.ndarray] = []
        self.mask = None

    def image(self, X: VectorField) -> np.ndarray:
        return self.sampler.evaluate(X)  # (N, dim)

    def refresh_mask(self, images: list[np.ndarray]):
        good = np.ones(self.sampler.count, dtype=bool)
        for im in images:
            good &= np.all(np.isfinite(im), axis=1)
        idx = np.nonzero(good)[0][: self.target]
        if idx.size < self.target // 2:
            raise SamplingError(f"only {idx.size} finite points of {self.sampler.count}")
        self.mask = idx


def generate_lie_closure(
    generators: Sequence[VectorField],
    cap: int = 12,
    max_depth: int = 5,
    box: Box | None = None,
    *,
    seed: int | None = 0,
    config: ClosureConfig | None = None,
) -> ClosureResult:
    """Close ``generators`` under brackets, keeping an independent basis.

    Pairs are processed in lexicographic order; only pairs involving at
    least one element from the previous sweep are bracketed. Running out of
    dimension budget or bracket depth is reported as ``exceeded``.
    """
    cfg = config or ClosureConfig(cap=cap, max_depth=max_depth)
    cap, max_depth = cfg.cap, cfg.max_depth
    gens = list(generators)
    if not gens:
        raise ValueError("need at least one generator")
    coords = gens[0].coords
    for g in gens:
        if g.coords != coords:
            raise ValueError("generators live on different spaces")
        if g.time_dependent:
            raise ValueError("freeze time-dependent generators before closing")
    n_points = max(cfg.points_per_dim * cap, cfg.min_points)
    names = sorted(set(coords).union(*(g.free_symbols for g in gens)))
    ws = _Workspace(names, n_points, box, seed)

    basis: list[VectorField] = []
    images: list[np.ndarray] = []
    max_resid = 0.0

    def member(im: np.ndarray) -> Membership:
        rows = ws.mask
        A = np.stack([b[rows].reshape(-1) for b in images], axis=1) if images else np.zeros((rows.size * len(coords), 0))
        return _lstsq_member(im[rows].reshape(-1), A)

    def usable(im):
        return np.all(np.isfinite(im[ws.mask]))

    ws.refresh_mask([ws.image(g) for g in gens])
    for g in gens:
        im = ws.image(g)
        if member(im).residual > cfg.membership_tol:
            basis.append(g)
            images.append(im)
            if len(basis) > cap:
                return ClosureResult("exceeded", len(basis), basis, None, 1, int(ws.mask.size), cap, max_depth,
                                     message="generators alone exceed the cap")
    if not basis:
        return ClosureResult("closed", 0, [], np.zeros((0, 0, 0)), 1, int(ws.mask.size), cap, max_depth)

    depth = 1
    frontier = set(range(len(basis)))
    done: set[tuple[int, int]] = set()
    while frontier:
        if depth + 1 > max_depth:
            return ClosureResult("exceeded", len(basis), basis, None, depth, int(ws.mask.size), cap, max_depth,
                                 max_resid, message="bracket depth budget exhausted")
        depth += 1
        new: set[int] = set()
        size = len(basis)
        for i in range(size):
            for j in range(i + 1, size):
                if (i, j) in done or not (i in frontier or j in frontier):
                    continue
                done.add((i, j))
                B = lie_bracket(basis[i], basis[j])
                im = ws.image(B)
                if not usable(im):
                    ws.refresh_mask(images + [im])
                mem = member(im)
                if mem.residual > cfg.membership_tol:
                    basis.append(B)
                    images.append(im)
                    new.add(len(basis) - 1)
                    if len(basis) > cap:
                        return ClosureResult("exceeded", len(basis), basis, None, depth, int(ws.mask.size), cap,
                                             max_depth, max_resid, message="dimension cap exceeded")
                else:
                    max_resid = max(max_resid, mem.residual)
        frontier = new

    d = len(basis)
    c = np.zeros((d, d, d))
    for i in range(d):
        for j in range(i + 1, d):
            im = ws.image(lie_bracket(basis[i], basis[j]))
            mem = member(im)
            max_resid = max(max_resid, mem.residual)
            c[i, j] = mem.coefficients
            c[j, i] = -mem.coefficients
    return ClosureResult("closed", d, basis, c, depth, int(ws.mask.size), cap, max_depth, max_resid)


def jacobi_defect(c: np.ndarray) -> float:
    """Largest entry of the Jacobi contraction of structure constants ``c[a, b, g]``."""
    d = c.shape[0]
    worst = 0.0
    for a in range(d):
        for b in range(d):
            for g in range(d):
                v = c[a, b] @ c[:, g] + c[b, g] @ c[:, a] + c[g, a] @ c[:, b]
                worst = max(worst, float(np.max(np.abs(v))) if v.size else 0.0)
    return worst


@dataclass
class LieCheck:
    verdict: str  # "yes" | "no-evidence" | "inconclusive"
    closure: ClosureResult
    decomposition_checked: bool
    time_samples: list[float] = field(default_factory=list)
    membership_residuals: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "decomposition_checked": self.decomposition_checked,
            "time_samples": self.time_samples,
            "membership_residuals": self.membership_residuals,
            "closure": self.closure.to_dict(),
        }


def default_time_samples(count: int = 4, seed: int | None = 0, span: tuple[float, float] = (0.3, 2.0)) -> list[float]:
    rng = np.random.default_rng(seed)
    return sorted(float(x) for x in rng.uniform(span[0], span[1], size=count))


def lie_scheffers_check(
    X: VectorField,
    time_samples: Sequence[float] | None = None,
    cap: int = 12,
    max_depth: int = 5,
    box: Box | None = None,
    *,
    seed: int | None = 0,
    membership_tol: float = 1e-7,
) -> LieCheck:
    """Evidence on whether ``{X_t}`` lies in a finite-dimensional Lie algebra."""
    if time_samples is None:
        time_samples = default_time_samples(4, seed)
    time_samples = [float(t) for t in time_samples]
    if len(time_samples) < 2:
        raise ValueError("need at least two time samples")
    cfg = ClosureConfig(cap=cap, max_depth=max_depth, membership_tol=membership_tol)
    frozen = [freeze_time(X, t) for t in time_samples]
    decomposition = getattr(X, "decomposition", None)
    try:
        if decomposition:
            closure = generate_lie_closure([f for _, f in decomposition], box=box, seed=seed, config=cfg)
        else:
            closure = generate_lie_closure(frozen, box=box, seed=seed, config=cfg)
    except SamplingError as exc:
        empty = ClosureResult("inconclusive", 0, [], None, 0, 0, cap, max_depth, message=str(exc))
        return LieCheck("inconclusive", empty, False, time_samples)
    if closure.status == "exceeded":
        return LieCheck("no-evidence", closure, False, time_samples)
    residuals = []
    if decomposition:
        for Xt in frozen:
            residuals.append(span_membership(Xt, closure.basis, box, seed=seed).residual)
        ok = all(r <= membership_tol for r in residuals)
        return LieCheck("yes" if ok else "inconclusive", closure, True, time_samples, residuals)
    return LieCheck("yes", closure, False, time_samples)


def minimal_prolongation_count(
    basis: Sequence[VectorField],
    m_max: int = 6,
    box: Box | None = None,
    *,
    seed: int | None = 0,
    sample_count: int = 8,
) -> int | None:
    """Least ``m`` whose ``m``-fold diagonal prolongations are pointwise independent."""
    basis = list(basis)
    if not basis:
        return None
    for m in range(1, m_max + 1):
        prolonged = [diagonal_prolongation(X, m) for X in basis]
        r = rank_at_samples(prolonged, sample_count, box, seed=seed, mode="pointwise")
        if r.rank == len(basis):
            return m
    return None
