"""Randomised identity testing for expressions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .compile import compile_exprs
from .nodes import Add, Expr, Neg, Sub
from .symbols import split_copy

DEFAULT_BOX = (0.3, 2.0)

Box = Mapping[str, tuple[float, float]]


@dataclass(frozen=True)
class ZeroTestConfig:
    trials: int = 32
    atol: float = 1e-9
    rtol: float = 1e-9
    max_rounds: int = 8
    default_box: tuple[float, float] = DEFAULT_BOX


@dataclass
class ZeroVerdict:
    verdict: str  # "zero" | "nonzero" | "inconclusive"
    witness: dict[str, float] | None = None
    max_abs: float = 0.0
    samples: int = 0
    value: float | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.verdict == "zero"

    @property
    def is_zero(self) -> bool:
        return self.verdict == "zero"


def additive_terms(e: Expr) -> list[Expr]:
    """Top-level summands of ``e`` (signs dropped); used for the error scale."""
    out: list[Expr] = []
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, (Add, Sub)):
            stack.extend((node.left, node.right))
        elif isinstance(node, Neg):
            stack.append(node.arg)
        else:
            out.append(node)
    return out


def sample_box(names: Sequence[str], n: int, rng: np.random.Generator, box: Box | None, default=DEFAULT_BOX):
    cols = {}
    for name in names:
        lo, hi = box_for(box, name, default)
        cols[name] = rng.uniform(lo, hi, size=n)
    return cols


def box_for(box: Box | None, name: str, default=DEFAULT_BOX) -> tuple[float, float]:
    """Interval for ``name``; copies such as ``x_(2)`` fall back to ``x``."""
    if box:
        if name in box:
            return tuple(box[name])
        base, idx = split_copy(name)
        if idx is not None and base in box:
            return tuple(box[base])
    return default


def is_zero_probabilistic(
    e: Expr | Sequence[Expr],
    box: Box | None = None,
    trials: int = 32,
    atol: float = 1e-9,
    rtol: float = 1e-9,
    *,
    seed: int | None = 0,
    rng: np.random.Generator | None = None,
    where: Sequence[Expr] = (),
    extra_symbols: Sequence[str] = (),
    config: ZeroTestConfig | None = None,
) -> ZeroVerdict:
    """Decide ``e == 0`` by sampling.

    ``e`` may be a list, in which case all entries must vanish. A sample
    point is admissible when every value is finite and each ``where``
    expression is positive there; inadmissible points are redrawn a bounded
    number of times before the verdict becomes ``inconclusive``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cfg = config or ZeroTestConfig(trials=trials, atol=atol, rtol=rtol)
    exprs = [e] if isinstance(e, Expr) else list(e)
    rng = rng if rng is not None else np.random.default_rng(seed)

    terms = [additive_terms(x) for x in exprs]
    flat_terms = [t for ts in terms for t in ts]
    all_exprs = exprs + flat_terms + list(where)
    names = sorted(set(extra_symbols).union(*(x.free_symbols for x in all_exprs)) if all_exprs else set())
    f = compile_exprs(all_exprs, names, "numpy")

    n_e, n_t = len(exprs), len(flat_terms)
    collected = 0
    max_abs = 0.0
    batch = max(2 * cfg.trials, 8)
    for _ in range(cfg.max_rounds):
        pts = sample_box(names, batch, rng, box, cfg.default_box)
        if names:
            vals = np.array(f(*(pts[nm] for nm in names)), dtype=float).reshape(len(all_exprs), batch)
        else:
            vals = np.array(f(), dtype=float).reshape(len(all_exprs), 1).repeat(batch, axis=1)
        ok = np.all(np.isfinite(vals[: n_e + n_t]), axis=0)
        if where:
            w = vals[n_e + n_t :]
            ok &= np.all(np.isfinite(w) & (w > 0), axis=0)
        for j in np.nonzero(ok)[0]:
            offset = n_e
            for i in range(n_e):
                k = len(terms[i])
                scale = float(np.max(np.abs(vals[offset : offset + k, j]))) if k else 0.0
                offset += k
                v = abs(float(vals[i, j]))
                max_abs = max(max_abs, v)
                if v > cfg.atol + cfg.rtol * scale:
                    witness = {nm: float(pts[nm][j]) for nm in names}
                    return ZeroVerdict("nonzero", witness, max_abs, collected + 1, float(vals[i, j]), {"index": i})
            collected += 1
            if collected >= cfg.trials:
                return ZeroVerdict("zero", None, max_abs, collected)
    return ZeroVerdict("inconclusive", None, max_abs, collected)
