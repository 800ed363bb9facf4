"""``sodelie`` command line: catalog queries plus algebra and verification checks."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .expr import ExprError
from .liealg import generate_lie_closure, minimal_prolongation_count
from .sode import is_sode_lie_system
from .srules import (
    CatalogEntry,
    CatalogError,
    FitConfig,
    RuleError,
    VerifyConfig,
    builtin_catalog,
    check_first_integral_conservation,
    check_XL_annihilates,
    find_entry,
    full_catalog,
    reconstruction_series,
    rule_char_residual,
    verify_superposition,
)
from .vfield import lie_bracket

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2

COMMANDS = (
    "catalog", "bracket", "closure", "lie-check", "sode-check", "min-m",
    "verify-sr", "conserve", "char-residual", "xl-check", "emit-plot",
)


class ConfigError(ValueError):
    """Bad command-line configuration; always exit code 2."""


@dataclass
class RunConfig:
    command: str
    entry: str | None = None
    rule: str | None = None
    integral: str | None = None
    fields: tuple[str, ...] = ()
    trials: int = 20
    t_span: tuple[float, float] | None = None
    tol: float | None = None
    atol: float = 1e-10
    rtol: float = 1e-10
    seed: int = 0
    cap: int = 12
    depth: int = 5
    m_max: int = 6
    samples: int = 64
    extra: bool = False
    branch_policy: str = "fixed"
    box: dict[str, tuple[float, float]] = field(default_factory=dict)
    default_box: tuple[float, float] | None = None
    catalog_dir: str | None = None
    output: str | None = None
    fmt: str = "json"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for name in ("atol", "rtol"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"tolerance misuse: --{name} must be a positive number, got {v}")
        if self.tol is not None and not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigError(f"tolerance misuse: --tol must be a positive number, got {self.tol}")
        if self.trials < 1:
            raise ConfigError("--trials must be at least 1")
        if self.cap < 1 or self.depth < 1:
            raise ConfigError("--cap and --depth must be positive")
        if self.t_span is not None and not self.t_span[0] < self.t_span[1]:
            raise ConfigError(f"--t-span needs t0 < t1, got {self.t_span}")
        if self.fmt == "csv" and self.command != "emit-plot":
            raise ConfigError("CSV output is only available for emit-plot")
        if self.command != "catalog" and not self.entry:
            raise ConfigError(f"{self.command} needs --entry")


# -- argument parsing ----------------------------------------------------------


def _interval(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"expected lo:hi, got {text!r}") from None
    if not lo < hi:
        raise ConfigError(f"empty interval {text!r}")
    return lo, hi


def parse_box(items: Sequence[str]) -> tuple[dict[str, tuple[float, float]], tuple[float, float] | None]:
    """``NAME=lo:hi`` overrides one symbol; a bare ``lo:hi`` sets the default box."""
    per, default = {}, None
    for item in items:
        if "=" in item:
            name, rng = item.split("=", 1)
            per[name.strip()] = _interval(rng)
        else:
            default = _interval(item)
    return per, default


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sodelie", description=__doc__)
    p.add_argument("--version", action="version", version=f"sodelie {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--entry", help="catalog entry name or path to a JSON entry file")
    p.add_argument("--rule", help="rule name within the entry (default: first rule)")
    p.add_argument("--integral", help="integral name for conserve (default: all)")
    p.add_argument("--fields", nargs="+", default=[], help="field names for bracket")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--t-span", nargs=2, type=float, metavar=("T0", "T1"))
    p.add_argument("--tol", type=float, help="reconstruction or drift tolerance")
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=12)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--m-max", type=int, default=6)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--extra", action="store_true", help="include extra fields in closure")
    p.add_argument("--branch-policy", choices=("fixed", "continuous"), default="fixed")
    p.add_argument("--box", action="append", default=[], metavar="[NAME=]LO:HI")
    p.add_argument("--catalog-dir", help="directory of JSON entry files (default: $SODELIE_CATALOG_DIR)")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    return p


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    a = build_parser().parse_args(argv)
    box, default = parse_box(a.box)
    cfg = RunConfig(
        command=a.command, entry=a.entry, rule=a.rule, integral=a.integral, fields=tuple(a.fields),
        trials=a.trials, t_span=tuple(a.t_span) if a.t_span else None, tol=a.tol, atol=a.atol, rtol=a.rtol,
        seed=a.seed, cap=a.cap, depth=a.depth, m_max=a.m_max, samples=a.samples, extra=a.extra,
        branch_policy=a.branch_policy, box=box, default_box=default, catalog_dir=a.catalog_dir,
        output=a.output, fmt=a.fmt,
    )
    cfg.validate()
    return cfg


# -- commands ------------------------------------------------------------------


def _box(cfg: RunConfig, entry: CatalogEntry) -> dict[str, tuple[float, float]]:
    box = dict(entry.box)
    if cfg.default_box is not None:
        names = set(entry.system.state) | {"t"}
        box.update({n: cfg.default_box for n in names})
    box.update(cfg.box)
    return box


def _report(cfg: RunConfig, entry: CatalogEntry | None, verdict: str, result, trials=(), tolerances=None) -> dict:
    return {
        "command": cfg.command,
        "entry": entry.name if entry else None,
        "verdict": verdict,
        "trials": list(trials),
        "tolerances": tolerances or {},
        "seed": cfg.seed,
        "version": __version__,
        "provenance": entry.provenance if entry else "",
        "result": result,
    }


def _cmd_catalog(cfg, entry):
    entries = full_catalog(cfg.catalog_dir)
    return EXIT_PASS, _report(cfg, None, "pass", [e.summary() for e in entries])


def _cmd_bracket(cfg, entry):
    if len(cfg.fields) != 2:
        raise ConfigError("bracket needs exactly two --fields")
    X, Y = (entry.field(n) for n in cfg.fields)
    Z = lie_bracket(X, Y)
    result = {"fields": list(cfg.fields), "coords": list(Z.coords), "components": [str(c) for c in Z.components]}
    return EXIT_PASS, _report(cfg, entry, "pass", result)


def _closure_fields(cfg, entry):
    fields = entry.all_fields() if cfg.extra else list(entry.basis)
    if not fields:
        raise ConfigError(f"entry {entry.name!r} declares no basis fields")
    return fields


def _cmd_closure(cfg, entry):
    res = generate_lie_closure(_closure_fields(cfg, entry), cfg.cap, cfg.depth, _box(cfg, entry), seed=cfg.seed)
    code = {"closed": EXIT_PASS, "exceeded": EXIT_FAIL}.get(res.status, EXIT_INCONCLUSIVE)
    verdict = {"closed": "pass", "exceeded": "fail"}.get(res.status, "inconclusive")
    result = res.to_dict()
    result["fields"] = [X.name for X in _closure_fields(cfg, entry)]
    return code, _report(cfg, entry, verdict, result, tolerances={"membership": 1e-7, "rank_rtol": 1e-8})


def _cmd_lie_check(cfg, entry):
    chk = is_sode_lie_system(entry.system, cfg.cap, cfg.depth, _box(cfg, entry), seed=cfg.seed)
    code = {"yes": EXIT_PASS, "no-evidence": EXIT_FAIL}.get(chk.verdict, EXIT_INCONCLUSIVE)
    return code, _report(cfg, entry, chk.verdict, chk.to_dict(), tolerances={"membership": 1e-7})


def _cmd_min_m(cfg, entry):
    if not entry.basis:
        raise ConfigError(f"entry {entry.name!r} declares no basis fields")
    m = minimal_prolongation_count(entry.basis, cfg.m_max, _box(cfg, entry), seed=cfg.seed)
    expected = entry.expected.get("min_m")
    verdict = "fail" if m is None or (expected is not None and m != expected) else "pass"
    result = {"min_m": m, "expected": expected, "m_max": cfg.m_max}
    return (EXIT_PASS if verdict == "pass" else EXIT_FAIL), _report(cfg, entry, verdict, result,
                                                                    tolerances={"rank_rtol": 1e-8})


def _verify_config(cfg: RunConfig) -> VerifyConfig:
    return VerifyConfig(trials=cfg.trials, tol=cfg.tol or 1e-6, atol=cfg.atol, rtol=cfg.rtol, seed=cfg.seed,
                        branch_policy=cfg.branch_policy, fit=FitConfig())


def _cmd_verify(cfg, entry):
    rep = verify_superposition(entry, cfg.rule, t_span=cfg.t_span, config=_verify_config(cfg))
    result = {"rule": rep.rule, "kind": rep.kind, "max_error": rep.max_error, **rep.extra}
    code = EXIT_PASS if rep.passed else EXIT_FAIL
    return code, _report(cfg, entry, rep.verdict, result, rep.trials, rep.tolerances)


def _cmd_conserve(cfg, entry):
    names = [cfg.integral] if cfg.integral else sorted(entry.integrals)
    if not names:
        raise ConfigError(f"entry {entry.name!r} has no first integrals")
    reports = []
    for n in names:
        if n not in entry.integrals:
            raise ConfigError(f"entry {entry.name!r} has no integral {n!r}")
        reports.append(check_first_integral_conservation(
            entry, n, cfg.trials, cfg.t_span, cfg.tol or 1e-7, seed=cfg.seed, atol=cfg.atol, rtol=cfg.rtol))
    passed = all(r.passed for r in reports)
    trials = [{"integral": r.integral, **t} for r in reports for t in r.trials]
    result = {r.integral: {"verdict": r.verdict, "annihilation": r.annihilation, "max_drift": r.max_drift}
              for r in reports}
    return (EXIT_PASS if passed else EXIT_FAIL), _report(cfg, entry, "pass" if passed else "fail", result, trials,
                                                         reports[0].tolerances)


def _cmd_char_residual(cfg, entry):
    tol = cfg.tol or 1e-8
    res = rule_char_residual(entry, cfg.rule, cfg.samples, seed=cfg.seed)
    if any(r.verdict == "inconclusive" for r in res.values()):
        verdict, code = "inconclusive", EXIT_INCONCLUSIVE
    elif all(r.max_residual < tol for r in res.values()):
        verdict, code = "pass", EXIT_PASS
    else:
        verdict, code = "fail", EXIT_FAIL
    result = {"rule": entry.rule(cfg.rule).name, "branches": {k: v.to_dict() for k, v in res.items()}}
    return code, _report(cfg, entry, verdict, result, tolerances={"residual": tol})


def _cmd_xl_check(cfg, entry):
    rule = entry.rule(cfg.rule)
    out = check_XL_annihilates(entry.system, rule, box=_box(cfg, entry) or None, seed=cfg.seed)
    code = {"yes": EXIT_PASS, "no": EXIT_FAIL}.get(out["verdict"], EXIT_INCONCLUSIVE)
    return code, _report(cfg, entry, out["verdict"], {"rule": rule.name, **out}, tolerances={"zero_test": 1e-9})


def _cmd_emit_plot(cfg, entry):
    rec, series = reconstruction_series(entry, cfg.rule, 0, t_span=cfg.t_span, config=_verify_config(cfg))
    if not series:
        return EXIT_FAIL, _report(cfg, entry, "fail", {"message": rec.get("status")}, [rec])
    tol = cfg.tol or 1e-6
    verdict = "pass" if rec["max_error"] < tol else "fail"
    return (EXIT_PASS if verdict == "pass" else EXIT_FAIL), {"_csv": series, **_report(cfg, entry, verdict, {}, [rec])}


_DISPATCH = {
    "catalog": _cmd_catalog,
    "bracket": _cmd_bracket,
    "closure": _cmd_closure,
    "lie-check": _cmd_lie_check,
    "sode-check": _cmd_lie_check,
    "min-m": _cmd_min_m,
    "verify-sr": _cmd_verify,
    "conserve": _cmd_conserve,
    "char-residual": _cmd_char_residual,
    "xl-check": _cmd_xl_check,
    "emit-plot": _cmd_emit_plot,
}


# -- serialisation -----------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def series_csv(series: dict) -> str:
    t, ref, rec = series["t"], np.asarray(series["reference"]), np.asarray(series["reconstructed"])
    n = ref.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["reference", "reconstructed", "abs_error"]
    w.writerow(["t"] + (cols if n == 1 else [f"{c}_{i}" for i in range(n) for c in cols]))
    for j, tj in enumerate(t):
        row = [repr(float(tj))]
        for i in range(n):
            a, b = float(ref[j, i]), float(rec[j, i])
            row += [repr(a), repr(b), repr(abs(a - b))]
        w.writerow(row)
    return buf.getvalue()


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute one command; returns the exit code and the report text."""
    cfg.validate()
    entry = None
    if cfg.command != "catalog":
        entry = find_entry(cfg.entry, cfg.catalog_dir)
    code, report = _DISPATCH[cfg.command](cfg, entry)
    series = report.pop("_csv", None)
    if cfg.fmt == "csv" and series is not None:
        return code, series_csv(series)
    return code, dumps_report(report)


def _error_report(kind: str, message: str) -> str:
    return dumps_report({"verdict": "error", "error": kind, "message": message, "version": __version__})


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        sys.stderr.write(f"sodelie: configuration error: {exc}\n")
        return EXIT_INCONCLUSIVE
    except SystemExit as exc:  # argparse
        return EXIT_INCONCLUSIVE if exc.code else EXIT_PASS
    try:
        code, text = run(cfg)
    except ConfigError as exc:
        code, text = EXIT_INCONCLUSIVE, _error_report("config", str(exc))
        sys.stderr.write(f"sodelie: configuration error: {exc}\n")
    except CatalogError as exc:
        msg = str(exc)
        kind = "unknown-entry" if msg.startswith("unknown entry") else "catalog"
        code, text = EXIT_INCONCLUSIVE, _error_report(kind, msg)
        sys.stderr.write(f"sodelie: {kind}: {msg}\n")
    except (ExprError, RuleError) as exc:
        code, text = EXIT_INCONCLUSIVE, _error_report("unparsable", str(exc))
        sys.stderr.write(f"sodelie: unparsable entry: {exc}\n")
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
