import math
import pickle
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from sodelie.expr import (
    ExprSyntaxError,
    Num,
    SymbolTable,
    UnassignedSymbolError,
    UndeclaredSymbolError,
    compile_exprs,
    copy_name,
    count_nodes,
    differentiate,
    evaluate,
    is_zero_probabilistic,
    num,
    parse,
    parse_free,
    split_copy,
    sym,
)
from sodelie.expr.zerotest import additive_terms

from strategies import NAMES, exprs

POINT = {"x": 0.7, "y": 1.3, "z": -0.4}


def _finite(v):
    return isinstance(v, float) and math.isfinite(v) and abs(v) < 1e8


# -- parsing and printing ---------------------------------------------------------


@given(exprs)
def test_print_parse_round_trip(e):
    assert parse(str(e), NAMES) is e


@given(exprs)
def test_pickle_round_trip(e):
    assert pickle.loads(pickle.dumps(e)) is e


def test_hash_consing_shares_nodes():
    a = parse("x*y + sin(x)", NAMES)
    b = parse("x*y + sin(x)", NAMES)
    assert a is b
    assert count_nodes(parse("(x*y)^2 + x*y", NAMES)) < 8


@pytest.mark.parametrize(
    "src, value",
    [
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("(-2)^2", 4.0),
        ("8/2/2", 2.0),
        ("1 - 2 - 3", -4.0),
        ("x^(1/2)", math.sqrt(0.7)),
        ("log(x)", math.log(0.7)),
        ("abs(-y) * sign(z)", -1.3),
    ],
)
def test_parse_precedence(src, value):
    assert evaluate(parse(src, NAMES), POINT) == pytest.approx(value)


def test_syntax_error_reports_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x +", NAMES)
    assert info.value.position == 3
    assert "offset 3" in str(info.value)


def test_undeclared_function_symbol():
    with pytest.raises(UndeclaredSymbolError) as info:
        parse("2*w(t)*x", ("x", "t"))
    assert info.value.name == "w"


def test_non_rational_exponent_rejected():
    with pytest.raises(ExprSyntaxError):
        parse("x^0.5", NAMES)
    with pytest.raises(ExprSyntaxError):
        parse("x^y", NAMES)


def test_copy_names():
    assert copy_name("v", 2) == "v_(2)"
    assert split_copy("y1_(13)") == ("y1", 13)
    assert split_copy("x") == ("x", None)
    e = parse_free("x_(1)*v_(2)")
    assert e.free_symbols == {"x_(1)", "v_(2)"}


def test_symbol_table_requires_single_time():
    table = SymbolTable.build(coordinate=("x",), velocity=("v",))
    assert "t" in table and table.role("v") == "velocity"
    with pytest.raises(ValueError):
        SymbolTable((("t", "time"), ("s", "time")))
    with pytest.raises(ValueError):
        SymbolTable((("x", "coordinate"), ("x", "velocity")))


def test_integer_literals_stay_exact():
    e = parse("1/3 + 1/6", ())
    assert isinstance(e, Num) and e.value == Fraction(1, 2)


# -- differentiation ----------------------------------------------------------------


@given(exprs, st.sampled_from(NAMES))
def test_derivative_matches_central_difference(e, var):
    d = differentiate(e, var)
    f0 = evaluate(e, POINT)
    df = evaluate(d, POINT)
    assume(_finite(f0) and _finite(df))
    h = 1e-6
    fp = evaluate(e, {**POINT, var: POINT[var] + h})
    fm = evaluate(e, {**POINT, var: POINT[var] - h})
    assume(_finite(fp) and _finite(fm))
    fd = (fp - fm) / (2 * h)
    # skip points near a kink or pole where the difference quotient is meaningless
    assume(abs(fd) < 1e4)
    assert df == pytest.approx(fd, rel=1e-4, abs=1e-4)


def test_derivative_rules():
    x = sym("x")
    assert differentiate(parse("abs(x)", NAMES), "x") is parse("sign(x)", NAMES)
    assert differentiate(parse("sign(x)", NAMES), "x") is num(0)
    assert differentiate(x, "y") is num(0)
    d = differentiate(parse("x^(3/2)", NAMES), "x")
    assert evaluate(d, {"x": 4.0}) == pytest.approx(3.0)


# -- evaluation and compilation ----------------------------------------------------------


@given(exprs)
def test_compiled_backends_agree_with_interpreter(e):
    ref = evaluate(e, POINT)
    assume(_finite(ref))
    f_math = compile_exprs([e], NAMES, "math")
    f_np = compile_exprs([e], NAMES, "numpy")
    got = f_math(*(POINT[n] for n in NAMES))[0]
    arr = f_np(*(np.full(3, POINT[n]) for n in NAMES))[0]
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)
    assert np.allclose(np.broadcast_to(arr, (3,)), ref, rtol=1e-12, atol=1e-12)
    with mpmath.workdps(30):
        hi = compile_exprs([e], NAMES, "mpmath")(*(mpmath.mpf(POINT[n]) for n in NAMES))[0]
    assert float(hi) == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_mpmath_backend_keeps_rationals_exact():
    f = compile_exprs([parse("x/3 - 1/3*x", NAMES)], ("x",), "mpmath")
    with mpmath.workdps(50):
        assert abs(f(mpmath.mpf(7))[0]) < mpmath.mpf(10) ** -45
    assert mpmath.isnan(compile_exprs([parse("ln(x)", NAMES)], ("x",), "mpmath")(mpmath.mpf(-1))[0])


def test_domain_errors_give_nan_or_inf():
    assert math.isnan(evaluate(parse("ln(x)", NAMES), {"x": -1.0}))
    assert math.isnan(evaluate(parse("sqrt(x)", NAMES), {"x": -1.0}))
    assert math.isinf(evaluate(parse("1/x", NAMES), {"x": 0.0}))
    f = compile_exprs([parse("ln(x)", NAMES)], ("x",), "numpy")
    assert np.isnan(f(np.array([-1.0, 1.0]))[0][0])


def test_unassigned_symbol():
    with pytest.raises(UnassignedSymbolError):
        evaluate(parse("x + y", NAMES), {"x": 1.0})


# -- zero testing ----------------------------------------------------------------------


def test_zero_test_identities():
    for src in ("sin(x)^2 + cos(x)^2 - 1", "(x + y)^2 - x^2 - 2*x*y - y^2", "exp(ln(x)) - x", "sqrt(x^2) - abs(x)"):
        assert is_zero_probabilistic(parse(src, NAMES)).verdict == "zero", src


def test_zero_test_witness():
    v = is_zero_probabilistic(parse("x*y - y*x + 1e-3*z", NAMES))
    assert v.verdict == "nonzero"
    assert set(v.witness) == {"x", "y", "z"}
    assert v.max_abs > 1e-9


def test_zero_test_domain_restriction():
    e = parse("sqrt(x^2) - x", NAMES)
    assert is_zero_probabilistic(e, box={"x": (-2.0, 2.0)}).verdict == "nonzero"
    assert is_zero_probabilistic(e, box={"x": (-2.0, 2.0)}, where=[sym("x")]).verdict == "zero"


def test_zero_test_inconclusive_when_never_finite():
    assert is_zero_probabilistic(parse("ln(-x)", NAMES)).verdict == "inconclusive"


@given(exprs)
def test_expression_minus_itself_is_zero(e):
    assert is_zero_probabilistic(e - e).verdict == "zero"


@given(exprs, st.integers(0, 2**16))
def test_zero_test_is_deterministic_per_seed(e, seed):
    a = is_zero_probabilistic(e, seed=seed)
    b = is_zero_probabilistic(e, seed=seed)
    assert a.verdict == b.verdict and a.witness == b.witness


def test_additive_terms_flatten_sums():
    terms = additive_terms(parse("x - y + 2*z", NAMES))
    assert len(terms) == 3
