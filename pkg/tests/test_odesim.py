import math

import numpy as np
import pytest

from indeflyap import exprlang as el
from indeflyap.odesim import InputSignal, simulate, sample_norm

DECAY = el.VectorField.parse(["-x1"])
EXAMPLE1 = el.VectorField.parse(["-x1/(t+sin(x1))"])


def rk4(fn, t0, y0, tf, h=1e-4):
    n = int(round((tf - t0) / h))
    t, y = t0, y0
    for i in range(n):
        k1 = fn(t, y)
        k2 = fn(t + h / 2, y + h / 2 * k1)
        k3 = fn(t + h / 2, y + h / 2 * k2)
        k4 = fn(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * h
    return y


def test_linear_decay():
    tr = simulate(DECAY, None, 0.0, [1.0], 1.0)
    assert tr.ok
    assert tr.states[-1, 0] == pytest.approx(math.exp(-1), abs=1e-8)
    assert tr.times[0] == 0.0 and tr.times[-1] == 1.0
    assert np.all(np.diff(tr.times) > 0)


@pytest.mark.parametrize("tol", [1e-5, 1e-6])
def test_error_drops_with_tolerance(tol):
    def err(rtol):
        tr = simulate(DECAY, None, 0.0, [1.0], 1.0, rtol=rtol, atol=rtol)
        return abs(tr.states[-1, 0] - math.exp(-1))

    assert err(tol) / err(tol / 32) >= 16


def test_determinism():
    a = simulate(EXAMPLE1, None, 2.0, [1.0], 50.0)
    b = simulate(EXAMPLE1, None, 2.0, [1.0], 50.0)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)


def test_interpolation_is_exact_at_step_points():
    tr = simulate(EXAMPLE1, None, 2.0, [1.0], 50.0)
    assert np.array_equal(tr.state_at(tr.times), tr.states)


def test_zero_field_is_constant():
    tr = simulate(el.VectorField.parse(["0", "0"]), None, 0.0, [3.0, 4.0], 10.0)
    assert tr.ok and np.all(tr.states == [3.0, 4.0])
    assert sample_norm(tr, [0.0, 2.5, 10.0]) == [(0.0, 5.0), (2.5, 5.0), (10.0, 5.0)]
    assert sample_norm(tr, []) == []


def test_example_one_against_fixed_step_oracle():
    tr = simulate(EXAMPLE1, None, 2.0, [1.0], 10.0)
    oracle = rk4(lambda t, x: -x / (t + math.sin(x)), 2.0, 1.0, 10.0)
    assert tr.states[-1, 0] == pytest.approx(oracle, abs=1e-8)
    assert abs(tr.states[-1, 0]) <= 3 / 11


def test_example_two_norm_is_nonincreasing():
    fld = el.VectorField.parse(["-x1/(1+t)+t^2*x2-t*x1", "-x2/(1+t)-t^2*x1-t*x2"])
    tr = simulate(fld, None, 0.0, [1.0, 1.0], 20.0)
    norms = [v for _, v in sample_norm(tr, np.linspace(0.0, 20.0, 401))]
    assert np.all(np.diff(norms) <= 1e-9)


def test_input_is_applied():
    fld = el.VectorField.parse(["-x1+u1"], m=1)
    tr = simulate(fld, InputSignal.parse(["1"]), 0.0, [0.0], 2.0)
    assert tr.states[-1, 0] == pytest.approx(1 - math.exp(-2), abs=1e-8)
    assert tr.input_sup([1.0])[0] == 1.0


def test_blow_up_is_truncated():
    tr = simulate(el.VectorField.parse(["x1^2"]), None, 0.0, [1.0], 2.0)
    assert tr.status == "diverged" and not tr.ok
    assert tr.t_end < 1.0 + 1e-6


def test_domain_error_truncates():
    tr = simulate(el.VectorField.parse(["-1/x1"]), None, 0.0, [1.0], 2.0)
    assert not tr.ok
    assert tr.status in ("domain_error", "step_underflow", "nonfinite")


@pytest.mark.parametrize("args", [
    dict(x0=[1.0, 2.0], tf=1.0),
    dict(x0=[1.0], tf=0.0),
])
def test_bad_arguments(args):
    with pytest.raises(ValueError):
        simulate(DECAY, None, 0.0, args["x0"], args["tf"])


def test_out_of_window_grid_is_rejected():
    tr = simulate(DECAY, None, 0.0, [1.0], 1.0)
    with pytest.raises(ValueError):
        sample_norm(tr, [1.5])


def test_input_must_depend_on_time_only():
    with pytest.raises(el.ExprNameError):
        InputSignal.parse(["x1"])
