import numpy as np
import pytest

from sodelie.expr import parse, sym
from sodelie.liealg import (
    generate_lie_closure,
    jacobi_defect,
    lie_scheffers_check,
    minimal_prolongation_count,
    numerical_rank,
    rank_at_samples,
    span_membership,
)
from sodelie.sode import is_sode_lie_system
from sodelie.srules import find_entry
from sodelie.vfield import VectorField, lie_bracket

SL2 = {(0, 1): (0, 1.0), (0, 2): (1, 2.0), (1, 2): (2, 1.0)}


def _vf(*comps, coords=("x", "v")):
    return VectorField(coords, tuple(parse(c, coords) for c in comps))


def _assert_sl2(c, tol=1e-7):
    expected = np.zeros_like(c)
    for (a, b), (g, val) in SL2.items():
        expected[a, b, g] = val
        expected[b, a, g] = -val
    assert np.max(np.abs(c - expected)) < tol


@pytest.mark.parametrize("name", ["ks2", "ks3", "mp", "oscillator"])
def test_sl2_entries_close_with_expected_constants(name):
    entry = find_entry(name)
    res = generate_lie_closure(entry.basis, box=entry.box or None)
    assert res.status == "closed" and res.dimension == 3
    _assert_sl2(res.structure_constants)
    assert jacobi_defect(res.structure_constants) < 1e-9


def test_oscillator_with_extra_field_is_gl2():
    entry = find_entry("oscillator")
    res = generate_lie_closure(entry.all_fields())
    assert res.closed and res.dimension == 4


def test_closure_generates_missing_brackets():
    X1 = _vf("v", "0")
    X3 = _vf("0", "-x")
    res = generate_lie_closure([X1, X3])
    assert res.closed and res.dimension == 3


def test_closure_reports_exceeded_with_lower_bound():
    res = generate_lie_closure([_vf("1", "0"), _vf("exp(x^2)", "0")], cap=6, max_depth=5)
    assert res.status == "exceeded"
    assert res.to_dict()["dimension_lower_bound"] >= 6


def test_closure_is_deterministic():
    gens = [_vf("v", "0"), _vf("0", "x^2")]
    a = generate_lie_closure(gens, seed=4).to_dict()
    b = generate_lie_closure(gens, seed=4).to_dict()
    assert a == b


def test_rank_modes():
    X = _vf("x", "0")
    Y = _vf("v", "0")
    assert rank_at_samples([X, Y], mode="stacked").rank == 2
    assert rank_at_samples([X, Y], mode="pointwise").rank == 1
    assert numerical_rank(np.array([[1.0, 2.0], [2.0, 4.0]]))[0] == 1


def test_span_membership():
    X1, X2 = _vf("v", "0"), _vf("x", "-v")
    cand = _vf("3*v + 2*x", "-2*v")
    m = span_membership(cand, [X1, X2])
    assert m.residual < 1e-10
    assert np.allclose(m.coefficients, [3.0, 2.0])
    assert span_membership(_vf("x^2", "0"), [X1, X2]).residual > 1e-3


@pytest.mark.parametrize("name, expected", [("ks2", 2), ("ks3", 1), ("mp", 2), ("oscillator", 2), ("free", 1)])
def test_minimal_prolongation_count(name, expected):
    entry = find_entry(name)
    assert minimal_prolongation_count(entry.basis, box=entry.box or None) == expected


@pytest.mark.parametrize("name", ["dmp", "tv2"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_non_lie_entries_give_no_evidence(name, seed):
    chk = is_sode_lie_system(find_entry(name).system, 12, 5, seed=seed)
    assert chk.verdict == "no-evidence"


@pytest.mark.parametrize("name", ["free", "t2v", "t2", "oscillator", "mp", "ks2", "ks3"])
def test_lie_entries_pass_lie_scheffers(name):
    entry = find_entry(name)
    chk = is_sode_lie_system(entry.system, box=entry.box or None)
    assert chk.verdict == "yes"
    assert chk.closure.dimension == entry.expected["dimension"]


@pytest.mark.parametrize("name", ["free", "t2v", "t2", "oscillator", "mp", "ks2", "ks3"])
def test_min_m_of_full_algebra_matches_catalog(name):
    entry = find_entry(name)
    res = generate_lie_closure(entry.basis, box=entry.box or None)
    assert minimal_prolongation_count(res.basis, box=entry.box or None) == entry.expected["min_m"]


def test_lie_scheffers_without_decomposition():
    X = VectorField(("x", "v"), (sym("v"), parse("-(1 + t^2)*x", ("x", "t"))), time_dependent=True)
    chk = lie_scheffers_check(X)
    assert chk.verdict == "yes" and chk.closure.dimension == 3


def test_bracket_antisymmetry_in_structure_constants():
    res = generate_lie_closure(find_entry("ks2").basis)
    c = res.structure_constants
    assert np.allclose(c, -np.transpose(c, (1, 0, 2)))
    assert lie_bracket(res.basis[0], res.basis[0]).is_zero()
