import json

import numpy as np
import pytest

from sodelie.expr import is_zero_probabilistic, parse
from sodelie.sode import build_XD_XL
from sodelie.srules import (
    CATALOG_ENV,
    CatalogError,
    RuleError,
    SuperpositionRule,
    VerifyConfig,
    builtin_catalog,
    char_residual,
    check_first_integral_conservation,
    check_XL_annihilates,
    entry_from_dict,
    find_entry,
    fit_constants,
    full_catalog,
    load_entry_file,
    project_hode_rule,
    rule_char_residual,
    total_derivative,
    verify_superposition,
)
from sodelie.srules.builtin import FREE_PARTICLE
from sodelie.srules.verify import _StateSampler, trial_rng

ALL_RULES = [(e.name, r) for e in builtin_catalog() for r in e.rules]


def quick(trials=4, **kw):
    return VerifyConfig(trials=trials, **kw)


# -- catalog ---------------------------------------------------------------------------


def test_catalog_contents():
    names = [e.name for e in builtin_catalog()]
    assert len(names) >= 9
    assert {"free", "tv2", "t2v", "t2", "oscillator", "mp", "dmp", "ks2", "ks3"} <= set(names)


def test_table_rows():
    assert str(find_entry("t2v").rule("row3").components[0]) == "k1*x_(1) + k2"
    tv2 = find_entry("tv2")
    assert all(r.is_partial for r in tv2.rules.values())
    assert str(tv2.rule("row2-partial").components[0]) == "x_(1) + k1"
    assert {r.kind for r in find_entry("free").rules.values()} == {"general", "partial"}


def test_entry_from_json_file(tmp_path):
    data = dict(FREE_PARTICLE, name="free-copy")
    path = tmp_path / "free.json"
    path.write_text(json.dumps(data))
    (entry,) = load_entry_file(path)
    assert entry.name == "free-copy"
    assert find_entry(str(path)).name == "free-copy"


def test_catalog_directory_from_environment(tmp_path, monkeypatch):
    (tmp_path / "a.json").write_text(json.dumps([dict(FREE_PARTICLE, name="extra1"), dict(FREE_PARTICLE, name="extra2")]))
    monkeypatch.setenv(CATALOG_ENV, str(tmp_path))
    names = {e.name for e in full_catalog()}
    assert {"extra1", "extra2", "mp"} <= names
    assert find_entry("extra2").name == "extra2"


@pytest.mark.parametrize(
    "patch, message",
    [
        ({"rhs": ["w*x"]}, "undeclared"),
        ({"rhs": ["x +"]}, "offset"),
        ({"levels": []}, "levels"),
        ({"colour": "red"}, "unknown keys"),
        ({"t_span": [1, 0]}, "empty interval"),
    ],
)
def test_bad_entries_are_rejected(patch, message):
    with pytest.raises(CatalogError, match=message):
        entry_from_dict({**FREE_PARTICLE, **patch})


def test_unknown_entry_lists_known_names():
    with pytest.raises(CatalogError, match="known entries"):
        find_entry("no-such-entry")


def test_corrupted_time_dependent_rule_is_rejected():
    bad = dict(FREE_PARTICLE, rules=[{"name": "r", "kind": "general", "m": 1, "constants": ["k1", "k2"],
                                       "components": ["v_(1)*(k1*x_(1) + k2) + t"]}])
    with pytest.raises(CatalogError, match="t-free"):
        entry_from_dict(bad)


def test_rule_kind_checks():
    levels = (("x",), ("v",))
    x1, v1 = parse("x_(1)", None), parse("v_(1)", None)
    with pytest.raises(RuleError, match="base"):
        SuperpositionRule("r", "base", levels, 1, ("k1", "k2"), (parse("k1*x_(1) + k2*v_(1)", None),))
    with pytest.raises(RuleError, match="fewer"):
        SuperpositionRule("r", "partial", levels, 1, ("k1", "k2"), (x1,))
    with pytest.raises(RuleError, match="needs 2 constants"):
        SuperpositionRule("r", "general", levels, 1, ("k1",), (v1,))
    with pytest.raises(RuleError, match="beyond"):
        SuperpositionRule("r", "general", levels, 1, ("k1", "k2"), (parse("k1*x_(2) + k2", None),))


def test_project_hode_rule():
    osc = find_entry("oscillator")
    projected = project_hode_rule(osc.rule("linear-jet"))
    assert projected.kind == "base"
    assert projected.components == osc.rule("linear").components
    same = osc.rule("linear")
    assert project_hode_rule(same) is same


# -- verification ----------------------------------------------------------------------


@pytest.mark.parametrize("entry_name, rule_name", [(e, r) for e, r in ALL_RULES if not r.endswith("-qb")])
def test_catalog_rules_verify(entry_name, rule_name):
    rep = verify_superposition(find_entry(entry_name), rule_name, config=quick())
    assert rep.passed, [t.get("max_error") for t in rep.trials]


def test_quasi_base_ks2_with_branch_tracking():
    rep = verify_superposition(find_entry("ks2"), "ks2-qb", config=quick(8, branch_policy="continuous"))
    assert rep.passed


def test_fixed_branch_fails_when_wronskian_changes_sign():
    # the quasi-base form picks one root of a perfect square, which is wrong after a sign change
    rep = verify_superposition(find_entry("mp"), "mp-qb", config=quick(10))
    assert not rep.passed


@pytest.mark.parametrize("entry_name, rule_name", [("mp", "mp"), ("t2", "two-positions"), ("t2", "two-jets"),
                                                   ("ks2", "ks2"), ("oscillator", "linear")])
def test_swapped_rule_still_verifies(entry_name, rule_name):
    entry = find_entry(entry_name)
    rep = verify_superposition(entry, entry.rule(rule_name).swapped(1, 2), config=quick())
    assert rep.passed


@pytest.mark.parametrize("name", ["mp", "ks2"])
def test_error_tracks_integrator_tolerance(name):
    entry = find_entry(name)
    loose = verify_superposition(entry, None, config=quick(3, atol=1e-6, rtol=1e-6, tol=1.0)).max_error
    tight = verify_superposition(entry, None, config=quick(3, atol=1e-8, rtol=1e-8, tol=1.0)).max_error
    assert tight * 10 <= loose


def test_verification_is_deterministic():
    entry = find_entry("ks2")
    a = verify_superposition(entry, None, config=quick(3, seed=11)).to_dict()
    b = verify_superposition(entry, None, config=quick(3, seed=11)).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_trials_are_independent_of_trial_count():
    entry = find_entry("mp")
    few = verify_superposition(entry, None, config=quick(2, seed=5)).trials
    more = verify_superposition(entry, None, config=quick(4, seed=5)).trials
    assert few == more[:2]


@pytest.mark.parametrize("name", ["mp", "ks2", "ks3", "oscillator", "t2"])
def test_fit_is_surjective_and_injective(name):
    entry = find_entry(name)
    rule = next(r for r in entry.rules.values() if not r.is_partial)
    genericity = [c for c in rule.constraints if not set(rule.constants) & c.free_symbols]
    sampler = _StateSampler(entry, range(0, rule.m + 2), genericity)
    rng = trial_rng(3, 0)
    states = sampler.draw(rng)
    p = np.concatenate([states[a] for a in range(1, rule.m + 1)])
    fits = [fit_constants(rule, entry.system, p, states[a], rng=rng) for a in (0, rule.m + 1)]
    for f in fits:
        assert f.converged and f.residual < 1e-8
    assert np.max(np.abs(fits[0].k - fits[1].k)) > 1e-6


def test_partial_rule_cannot_be_fitted():
    entry = find_entry("t2")
    with pytest.raises(Exception, match="partial"):
        fit_constants(entry.rule("shift"), entry.system, [0.0, 1.0], [1.0, 1.0])


# -- first integrals -----------------------------------------------------------------------


@pytest.mark.parametrize("entry_name, integral", [(e.name, i) for e in builtin_catalog() for i in e.integrals])
def test_integrals_are_conserved(entry_name, integral):
    rep = check_first_integral_conservation(find_entry(entry_name), integral, trials=4)
    assert rep.passed and rep.annihilation == "zero"
    assert rep.max_drift < 1e-7


def test_non_integral_is_caught():
    entry = entry_from_dict({**FREE_PARTICLE, "integrals": [{"name": "bad", "expr": "x_(1)*v_(1)"}]})
    rep = check_first_integral_conservation(entry, "bad", trials=2)
    assert not rep.passed and rep.annihilation == "nonzero"


@pytest.mark.parametrize("entry_name", ["mp", "ks2"])
def test_quasi_base_auxiliaries_are_annihilated(entry_name):
    entry = find_entry(entry_name)
    for rule in entry.rules.values():
        if rule.kind != "quasi_base":
            continue
        XD, _ = build_XD_XL(entry.system, rule.m)
        for aux in rule.aux.values():
            assert is_zero_probabilistic(total_derivative(XD, aux)).verdict == "zero"


# -- characteristic system -------------------------------------------------------------------


@pytest.mark.parametrize("entry_name, rule_name", [(e, r) for e, r in ALL_RULES if not r.endswith("-qb")])
def test_char_residual_small_for_catalog_rules(entry_name, rule_name):
    for res in rule_char_residual(find_entry(entry_name), rule_name).values():
        assert res.verdict == "ok" and res.max_residual < 1e-8


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("entry_name", ["ks2", "ks3"])
def test_char_residual_is_seed_robust(entry_name, seed):
    for res in rule_char_residual(find_entry(entry_name), entry_name, seed=seed).values():
        assert res.verdict == "ok" and res.max_residual < 1e-20


def test_char_residual_detects_wrong_candidate():
    S = find_entry("t2").system
    u = [parse("k1*x_(1)^2 + k2", None)]
    assert char_residual(S, u, 1).max_residual > 1e-3


@pytest.mark.parametrize("entry_name", ["mp", "ks2", "oscillator", "free"])
def test_XL_annihilates_rules(entry_name):
    entry = find_entry(entry_name)
    for rule in entry.rules.values():
        assert check_XL_annihilates(entry.system, rule)["verdict"] == "yes"


def test_XL_rejects_velocity_dependent_rule_for_nonautonomous_sode():
    entry = find_entry("oscillator")
    rule = SuperpositionRule("bad", "general", (("x",), ("v",)), 2, ("k1", "k2"),
                             (parse("k1*x_(1) + k2*v_(2)", None),))
    out = check_XL_annihilates(entry.system, rule)
    assert out["verdict"] == "no" and out["witness"]
