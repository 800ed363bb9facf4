import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sodelie.expr import parse, sym
from sodelie.integrate import IntegratorConfig, dense_eval, integrate_ivp
from sodelie.vfield import VectorField

OSC = VectorField(("x", "v"), (sym("v"), parse("-x", ("x",))))


def _osc_exact(y0, t):
    x0, v0 = y0
    return np.array([x0 * math.cos(t) + v0 * math.sin(t), -x0 * math.sin(t) + v0 * math.cos(t)])


@pytest.mark.parametrize("tol", [1e-6, 1e-8, 1e-10, 1e-12])
def test_dopri_error_tracks_tolerance(tol):
    tr = integrate_ivp(OSC, [1.0, 0.0], (0.0, 2 * math.pi), atol=tol, rtol=tol)
    err = np.max(np.abs(tr.y[-1] - _osc_exact([1.0, 0.0], 2 * math.pi)))
    assert tr.ok
    assert err < 100 * tol


def test_dense_output_is_accurate_between_steps():
    tr = integrate_ivp(OSC, [1.0, 0.0], (0.0, 4.0))
    for t in np.linspace(0.0, 4.0, 37):
        assert np.allclose(tr.dense_eval(t), _osc_exact([1.0, 0.0], t), atol=1e-9)
    # stored nodes are reproduced exactly
    assert np.array_equal(dense_eval(tr, tr.t[3]), tr.y[3])


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_free_particle_is_exact(x0, v0):
    X = VectorField(("x", "v"), (sym("v"), parse("0", ())))
    tr = integrate_ivp(X, [x0, v0], (0.0, 3.0), atol=1e-8, rtol=1e-8)
    assert tr.y[-1] == pytest.approx([x0 + 3 * v0, v0], abs=1e-12)


def test_time_dependent_field():
    X = VectorField(("x",), (parse("t", ("t",)),), time_dependent=True)
    tr = integrate_ivp(X, [0.0], (0.0, 2.0))
    assert tr.y[-1, 0] == pytest.approx(2.0, abs=1e-12)


def test_constraint_exit_keeps_valid_prefix():
    X = VectorField(("x",), (parse("-1", ()),))
    tr = integrate_ivp(X, [1.0], (0.0, 3.0), constraints=[sym("x")])
    assert tr.status == "constraint-exit"
    assert 0.9 < tr.exit_time <= 1.0 + 1e-5
    assert np.all(tr.y[:, 0] > 0)


def test_blow_up_is_reported():
    X = VectorField(("x",), (parse("x^2", ("x",)),))
    tr = integrate_ivp(X, [1.0], (0.0, 2.0))
    assert not tr.ok
    assert tr.status in ("nonfinite", "step-underflow", "max-steps")


def _rk4_endpoint_error(h):
    tr = integrate_ivp(OSC, [1.0, 0.0], (0.0, 2 * math.pi), config=IntegratorConfig("rk4", h=h))
    return float(np.linalg.norm(tr.y[-1] - _osc_exact([1.0, 0.0], 2 * math.pi)))


@pytest.mark.parametrize("h", [0.2, 0.1, 0.05])
def test_rk4_is_fourth_order(h):
    ratio = _rk4_endpoint_error(h) / _rk4_endpoint_error(h / 2)
    assert 10 <= ratio <= 24


def test_bad_config():
    with pytest.raises(ValueError):
        IntegratorConfig("euler")
    with pytest.raises(ValueError):
        integrate_ivp(OSC, [1.0], (0.0, 1.0))
    with pytest.raises(ValueError):
        integrate_ivp(OSC, [1.0, 0.0], (1.0, 0.0))


def test_csv_header():
    tr = integrate_ivp(OSC, [1.0, 0.0], (0.0, 1.0))
    assert tr.to_csv([0.0, 0.5]).splitlines()[0] == "t,x,v"
