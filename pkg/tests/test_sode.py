import pytest

from sodelie.expr import is_zero_probabilistic, parse, sym
from sodelie.sode import HodeSystem, SodeSystem, build_XD_XL, drift_field, time_derivative_field
from sodelie.srules import find_entry

XV = ("x", "v", "t")


def test_lift_of_sode():
    S = SodeSystem.make(["x"], ["v"], [parse("-t*x", XV)])
    X = S.to_first_order()
    assert X.coords == ("x", "v")
    assert X.time_dependent
    assert [str(c) for c in X.components] == ["v", "-t*x"]
    assert not S.autonomous


def test_sode_needs_two_levels():
    with pytest.raises(ValueError):
        SodeSystem((("x",), ("v",), ("a",)), (sym("x"),))


def test_rhs_must_be_declared():
    with pytest.raises(ValueError):
        SodeSystem.make(["x"], ["v"], [parse("w*x", None)])


def test_parameters_and_functions_are_resolved():
    S = SodeSystem.make(["x"], ["v"], [parse("-w^2*x + c/x^3", None)],
                        parameters={"c": parse("2", ())}, functions={"w": parse("1 + t", ("t",))})
    F = S.F[0]
    assert F.free_symbols == {"x", "t"}
    assert F.evaluate({"x": 1.0, "t": 1.0}) == pytest.approx(-4.0 + 2.0)


def test_hode_lift_shifts_levels():
    S = find_entry("ks3").system
    X = S.to_first_order()
    assert X.coords == ("x", "y1", "y2")
    assert str(X.components[0]) == "y1" and str(X.components[1]) == "y2"
    XL = time_derivative_field(S)
    assert [str(c) for c in XL.components[:2]] == ["0", "0"]


def test_XD_and_XL_prolongations():
    S = find_entry("oscillator").system
    XD, XL = build_XD_XL(S, 2)
    assert XD.coords == ("x_(1)", "v_(1)", "x_(2)", "v_(2)")
    expected = parse("-2*t*x_(1)", None)
    assert is_zero_probabilistic(XL.components[1] - expected).verdict == "zero"
    assert str(XL.components[0]) == "0"


def test_XL_vanishes_for_autonomous_systems():
    S = find_entry("free").system
    _, XL = build_XD_XL(S, 3)
    assert is_zero_probabilistic(list(XL.components)).verdict == "zero"


def test_drift_matches_lift():
    S = find_entry("mp").system
    assert drift_field(S).components == S.to_first_order().components


def test_hode_system_rejects_ragged_levels():
    with pytest.raises(ValueError):
        HodeSystem((("x", "y"), ("u",)), (sym("x"), sym("y")))
