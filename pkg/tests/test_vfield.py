import itertools

import pytest
from hypothesis import given, settings

from sodelie.expr import is_zero_probabilistic, parse, sym
from sodelie.srules import builtin_catalog
from sodelie.vfield import (
    CoordinateMismatch,
    TimeDepVectorField,
    VectorField,
    diagonal_prolongation,
    freeze_time,
    lie_bracket,
    linear_combination,
)

from strategies import poly_fields


def _zero(X: VectorField, tol=1e-8) -> bool:
    return is_zero_probabilistic(list(X.components), atol=tol, rtol=tol).verdict == "zero"


@given(poly_fields, poly_fields)
def test_bracket_antisymmetric(X, Y):
    assert _zero(lie_bracket(X, Y) + lie_bracket(Y, X))


@settings(max_examples=50)
@given(poly_fields, poly_fields, poly_fields)
def test_jacobi_identity(X, Y, Z):
    J = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) + lie_bracket(Z, lie_bracket(X, Y))
    assert _zero(J)


@given(poly_fields, poly_fields)
def test_bracket_is_commutator_of_derivations(X, Y):
    f = parse("x^2*y + sin(y)", ("x", "y"))
    lhs = lie_bracket(X, Y).apply(f)
    rhs = X.apply(Y.apply(f)) - Y.apply(X.apply(f))
    assert is_zero_probabilistic(lhs - rhs).verdict == "zero"


def test_bracket_of_coordinate_fields():
    X = VectorField.from_dict(("x", "y"), {"x": 1})
    Y = VectorField.from_dict(("x", "y"), {"x": sym("y"), "y": parse("x^2", ("x",))})
    Z = lie_bracket(X, Y)
    assert str(Z.components[1]) == "2*x"


def test_coordinate_mismatch():
    X = VectorField(("x", "y"), (sym("y"), sym("x")))
    Y = VectorField(("x", "z"), (sym("z"), sym("x")))
    with pytest.raises(CoordinateMismatch):
        lie_bracket(X, Y)


def test_time_must_be_declared():
    with pytest.raises(ValueError):
        VectorField(("x",), (parse("t*x", ("t", "x")),))
    X = VectorField(("x",), (parse("t*x", ("t", "x")),), time_dependent=True)
    assert freeze_time(X, 2).components[0] == parse("2*x", ("x",))


def test_prolongation_names_and_shape():
    X = VectorField(("x", "v"), (sym("v"), parse("-x", ("x",))))
    P = diagonal_prolongation(X, 2)
    assert P.coords == ("x_(1)", "v_(1)", "x_(2)", "v_(2)")
    assert str(P.components[3]) == "-x_(2)"


@pytest.mark.parametrize("m", [1, 2, 3])
def test_prolongation_commutes_with_bracket(m):
    for entry in builtin_catalog():
        for X, Y in itertools.combinations(entry.all_fields(), 2):
            lhs = diagonal_prolongation(lie_bracket(X, Y), m)
            rhs = lie_bracket(diagonal_prolongation(X, m), diagonal_prolongation(Y, m))
            assert _zero(lhs - rhs, 1e-9), (entry.name, X.name, Y.name)


def test_time_dependent_decomposition():
    X1 = VectorField(("x", "v"), (sym("v"), parse("0", ())), name="X1")
    X3 = VectorField(("x", "v"), (parse("0", ()), parse("-x", ("x",))), name="X3")
    w2 = parse("1 + t^2", ("t",))
    X = TimeDepVectorField.from_decomposition([(parse("1", ()), X1), (w2, X3)])
    assert X.check_decomposition()
    direct = linear_combination([1, 2], [X1, X3])
    assert _zero(freeze_time(X, 1) - direct)
