"""Acceptance checks, one test per criterion.

Each test records a one-line verdict; ``conftest.py`` prints them in the
terminal summary, and running this file directly prints them too.
"""

import copy
import itertools
import json
import math

import numpy as np
import pytest

from sodelie.cli import main as cli_main
from sodelie.expr import is_zero_probabilistic, num, parse, power, sym
from sodelie.integrate import IntegratorConfig, integrate_ivp
from sodelie.liealg import generate_lie_closure
from sodelie.sode import is_sode_lie_system
from sodelie.srules import (
    VerifyConfig,
    builtin_catalog,
    char_residual,
    check_first_integral_conservation,
    entry_from_dict,
    find_entry,
    rule_char_residual,
    verify_superposition,
)
from sodelie.srules.builtin import KUMMER_SCHWARZ_2
from sodelie.vfield import VectorField, diagonal_prolongation, lie_bracket

RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])
    assert ok, RESULTS[n]


def _sl2_error(c: np.ndarray) -> float:
    expected = np.zeros_like(c)
    for a, b, g, val in ((0, 1, 0, 1.0), (0, 2, 1, 2.0), (1, 2, 2, 1.0)):
        expected[a, b, g], expected[b, a, g] = val, -val
    return float(np.max(np.abs(c - expected)))


def _sl2_check(n: int, name: str) -> None:
    entry = find_entry(name)
    res = generate_lie_closure(entry.basis)
    err = _sl2_error(res.structure_constants) if res.closed and res.dimension == 3 else math.inf
    record(n, res.closed and res.dimension == 3 and err < 1e-7,
           f"{name}: status={res.status} dim={res.dimension} max structure-constant error={err:.1e}")


def test_criterion_01_ks2_algebra():
    _sl2_check(1, "ks2")


def test_criterion_02_ks3_algebra():
    _sl2_check(2, "ks3")


def test_criterion_03_oscillator_gl2():
    res = generate_lie_closure(find_entry("oscillator").all_fields())
    record(3, res.closed and res.dimension == 4, f"oscillator + Delta_L: status={res.status} dim={res.dimension}")


def test_criterion_04_prolongation_homomorphism():
    checked, bad = 0, []
    for entry in builtin_catalog():
        for (X, Y), m in itertools.product(itertools.combinations(entry.all_fields(), 2), (1, 2, 3)):
            lhs = diagonal_prolongation(lie_bracket(X, Y), m)
            rhs = lie_bracket(diagonal_prolongation(X, m), diagonal_prolongation(Y, m))
            v = is_zero_probabilistic(list((lhs - rhs).components), atol=1e-9, rtol=1e-9)
            checked += 1
            if v.verdict != "zero":
                bad.append((entry.name, X.name, Y.name, m))
    record(4, checked > 0 and not bad, f"{checked} (pair, m) cases, failures={bad}")


def test_criterion_05_characteristic_residual():
    rows = []
    t2 = find_entry("t2")
    rows.append(("t2 x_(1)+k1", char_residual(t2.system, [parse("x_(1) + k1", None)], 1).max_residual))
    for entry_name, rule_name in (("t2", "two-positions"), ("t2", "two-jets"), ("mp", "mp"), ("ks2", "ks2")):
        res = rule_char_residual(find_entry(entry_name), rule_name)
        rows.append((f"{entry_name}/{rule_name}", max(r.max_residual for r in res.values())))
    worst = max(r for _, r in rows)
    record(5, worst < 1e-8, "max residual " + ", ".join(f"{k}={v:.1e}" for k, v in rows))


def _superposition(n, entry_name, rule_name, integrals, drift_must_hold=None):
    entry = find_entry(entry_name)
    rep = verify_superposition(entry, rule_name, config=VerifyConfig(trials=20, tol=1e-6, atol=1e-10, rtol=1e-10))
    drifts = {i: check_first_integral_conservation(entry, i, trials=20, tol=1e-7) for i in integrals}
    ok = rep.passed and all(d.passed for d in drifts.values())
    detail = f"{entry_name}/{rep.rule}: 20 trials max error={rep.max_error:.1e}; " + ", ".join(
        f"{k} drift={d.max_drift:.1e}" for k, d in drifts.items())
    return ok, detail


def test_criterion_06_milne_pinney():
    mp = find_entry("mp")
    setup = (str(mp.system.functions["w"]) == "1 + 3/10*sin(t)" and mp.system.parameters["c"] == num(1)
             and mp.t_span == (0.0, 2.0))
    ok, detail = _superposition(6, "mp", "mp", ["I3"])
    record(6, ok and setup, detail)


def _ks2_variant_error(exponent: int) -> float:
    data = copy.deepcopy(KUMMER_SCHWARZ_2)
    data["name"] = f"ks2-exp{exponent}"
    data["definitions"] = [
        [k, v.replace("G12^2", f"G12^{exponent}")] if k == "lam2" else [k, v] for k, v in data["definitions"]]
    rep = verify_superposition(entry_from_dict(data), "ks2", config=VerifyConfig(trials=3, tol=1e-6))
    return rep.max_error


def test_criterion_07_kummer_schwarz_2():
    ok, detail = _superposition(7, "ks2", "ks2", ["Gamma1", "Gamma2", "Gamma3"])
    square, cube = _ks2_variant_error(2), _ks2_variant_error(3)
    resolved = square < 1e-6 and not cube < 1e-6
    record(7, ok and resolved, f"{detail}; lambda exponent 2 error={square:.1e}, exponent 3 error={cube:.1e}")


def test_criterion_08_kummer_schwarz_3():
    entry = find_entry("ks3")
    rule = entry.rule("ks3")
    shape = rule.m == 1 and rule.constants == ("k1", "k2", "k3")
    ok, detail = _superposition(8, "ks3", "ks3", ["Gamma1"])
    record(8, ok and shape, detail)


def test_criterion_09_table_rows():
    cfg = VerifyConfig(trials=20, tol=1e-6)
    checks = {
        "row 1 general": verify_superposition(find_entry("free"), "row1", config=cfg).passed,
        "row 1 partial": verify_superposition(find_entry("free"), "row1-partial", config=cfg).passed,
        "row 2 no general rule": all(r.is_partial for r in find_entry("tv2").rules.values())
        and find_entry("tv2").expected.get("general_rule") is False,
        "row 2 partial": verify_superposition(find_entry("tv2"), "row2-partial", config=cfg).passed,
        "row 3 general": verify_superposition(find_entry("t2v"), "row3", config=cfg).passed,
        "difference partial": verify_superposition(find_entry("t2"), "difference", config=cfg).passed,
    }
    record(9, all(checks.values()), ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()))


def test_criterion_10_negative_evidence():
    verdicts = {}
    stable = True
    for name in ("dmp", "tv2"):
        S = find_entry(name).system
        for seed in (0, 1, 2):
            first = is_sode_lie_system(S, 12, 5, seed=seed)
            again = is_sode_lie_system(S, 12, 5, seed=seed)
            stable &= first.to_dict() == again.to_dict()
            verdicts[(name, seed)] = first.verdict
    ok = stable and all(v == "no-evidence" for v in verdicts.values())
    record(10, ok, f"verdicts={sorted(set(verdicts.values()))} over dmp/tv2 x seeds 0-2, deterministic={stable}")


def _random_poly(rng) -> VectorField:
    x, y = sym("x"), sym("y")
    comps = []
    for _ in range(2):
        e = num(0)
        for _ in range(rng.integers(1, 4)):
            c = int(rng.integers(-3, 4))
            e = e + num(c) * power(x, int(rng.integers(0, 3))) * power(y, int(rng.integers(0, 3)))
        comps.append(e)
    return VectorField(("x", "y"), tuple(comps))


def test_criterion_11_bracket_laws():
    rng = np.random.default_rng(2024)
    failures = 0
    for _ in range(50):
        X, Y, Z = (_random_poly(rng) for _ in range(3))
        anti = lie_bracket(X, Y) + lie_bracket(Y, X)
        jac = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) + lie_bracket(Z, lie_bracket(X, Y))
        for F in (anti, jac):
            if is_zero_probabilistic(list(F.components), atol=1e-8, rtol=1e-8).verdict != "zero":
                failures += 1
    record(11, failures == 0, f"50 polynomial triples, antisymmetry/Jacobi failures={failures}")


def test_criterion_12_rk4_order_and_determinism(tmp_path):
    X = VectorField(("x", "v"), (sym("v"), parse("-x", ("x",))))
    T = 2 * math.pi
    exact = np.array([1.0, 0.0])

    def err(h):
        tr = integrate_ivp(X, [1.0, 0.0], (0.0, T), config=IntegratorConfig("rk4", h=h))
        return float(np.linalg.norm(tr.y[-1] - exact))

    ratio = err(T / 40) / err(T / 80)
    outs = []
    for i in range(2):
        p = tmp_path / f"r{i}.json"
        cli_main(["verify-sr", "--entry", "mp", "--trials", "3", "--seed", "9", "-o", str(p)])
        outs.append(p.read_bytes())
    same = outs[0] == outs[1] and json.loads(outs[0])["seed"] == 9
    record(12, 10 <= ratio <= 24 and same, f"RK4 halving ratio={ratio:.2f}, reports byte-identical={same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
