import ast
import inspect
import math

import numpy as np
import pytest

import nonlocal_ivp.oracle as oracle_module
from nonlocal_ivp.errors import NonFiniteState, NoRoot
from nonlocal_ivp.operator import residual
from nonlocal_ivp.oracle import integrate_ivp, rk4_error_ratio, solve_nonlocal
from nonlocal_ivp.problem import ProblemSpec

from conftest import example

# reference values from the shooting solver at N=1024 (a=0.1, g(t)=t, h(t)=1)
EX1_AB = (0.08252729988392132, 0.09388420939593745)
EX2_AB = (0.05453460008192221, 0.11247656375403538)


def test_integrates_t_only_right_sides_exactly():
    p = ProblemSpec.from_strings("1", "0", "0", "0", n_intervals=64)
    x, y = integrate_ivp(p, 0.0, 5.0)
    np.testing.assert_allclose(x.values, x.t, atol=1e-14)
    assert np.all(y.values == 5.0)
    p = ProblemSpec.from_strings("4*t^3", "3*t^2", "0", "0", n_intervals=8)
    x, y = integrate_ivp(p, 0.0, 0.0)
    np.testing.assert_allclose(x.values, x.t ** 4, atol=1e-14)


def test_circle_and_exponential():
    x, _ = integrate_ivp(ProblemSpec.from_strings("y", "-x", "0", "0"), 1.0, 0.0)
    assert abs(x.values[-1] - math.cos(1.0)) < 1e-9
    x, _ = integrate_ivp(ProblemSpec.from_strings("x", "0", "0", "0"), 1.0, 0.0)
    assert abs(x.values[-1] - math.e) < 1e-8


def test_fourth_order():
    assert rk4_error_ratio() >= 12.0


def test_blow_up_is_reported():
    with pytest.raises(NonFiniteState):
        integrate_ivp(ProblemSpec.from_strings("x^2", "0", "0", "0", n_intervals=256), 100.0, 0.0)


def test_constant_conditions_take_one_newton_step():
    p = ProblemSpec.from_strings("sin(x) + y", "x*y", "0.3", "-0.2", n_intervals=64)
    r = solve_nonlocal(p)
    assert r.newton_steps == 1
    assert r.a == pytest.approx(0.3, abs=1e-10) and r.b == pytest.approx(-0.2, abs=1e-10)


@pytest.mark.parametrize("name, ab", [("ex1", EX1_AB), ("ex2", EX2_AB)])
def test_reference_roots(name, ab):
    p = example(name)
    r = solve_nonlocal(p)
    assert r.mismatch_norm <= 1e-10
    assert (r.a, r.b) == pytest.approx(ab, abs=1e-9)


@pytest.mark.parametrize("name", ["ex1", "ex2", "ex2_strict"])
def test_oracle_self_consistency(name):
    p = example(name)
    r = solve_nonlocal(p, tol=1e-10)
    res = residual(r.to_state(), p)
    assert max(res.ode1, res.ode2) <= 1e-6
    assert max(res.nl1, res.nl2) <= 1e-10


def test_no_root():
    p = ProblemSpec.from_strings("0", "0", "x(0) + 1", "0", n_intervals=8)
    with pytest.raises(NoRoot):
        solve_nonlocal(p, radii=(1.0, 1.0))


def test_tolerance_must_be_positive(ex1):
    with pytest.raises(ValueError):
        solve_nonlocal(ex1, tol=0.0)


def test_oracle_does_not_use_the_fixed_point_code():
    tree = ast.parse(inspect.getsource(oracle_module))
    imported = {node.module for node in ast.walk(tree) if isinstance(node, ast.ImportFrom)}
    assert not imported & {"operator", "solver", "hypotheses"}
