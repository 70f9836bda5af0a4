import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_ivp.errors import GridMismatch, NonFiniteState
from nonlocal_ivp.hypotheses import build_M_theta
from nonlocal_ivp.operator import apply_T, cumulative_integral, residual
from nonlocal_ivp.problem import LipschitzSpec, ProblemSpec
from nonlocal_ivp.space import GridFunction, SystemState, nodes, vector_distance

from conftest import example


def test_cumulative_integral_examples():
    out = cumulative_integral(GridFunction.from_callable(lambda s: s, 1024))
    assert out.values[0] == 0.0
    assert out.values[-1] == 0.5
    assert np.all(cumulative_integral(GridFunction.constant(0.0, 64)).values == 0.0)
    sq = cumulative_integral(GridFunction.from_callable(lambda s: s * s, 1024))
    assert abs(sq.values[-1] - 1 / 3) < 1e-6
    np.testing.assert_allclose(sq.values, nodes(1024) ** 3 / 3, atol=1e-6)


def test_cumulative_integral_is_second_order():
    errs = [abs(cumulative_integral(GridFunction.from_callable(lambda s: s * s, n)).values[-1] - 1 / 3)
            for n in (64, 128, 256, 512)]
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine >= 3.5


def test_T_on_zero_state_of_example_one():
    p = ProblemSpec.from_strings("0.25*sin(x) + a*y", "cos(a*x + 0.25*y)",
                                 "0.125*sin(x(0.25) + y(0.25))", "0.125*cos(x(0.25) + y(0.25))", {"a": 0.1})
    Tu = apply_T(SystemState.zero(p.n_intervals), p)
    assert np.all(Tu.x.values == 0.0) and Tu.a == 0.0
    np.testing.assert_allclose(Tu.y.values, nodes(p.n_intervals), atol=1e-15)
    assert Tu.b == 0.125


def test_T_with_zero_dynamics_keeps_only_scalars():
    p = ProblemSpec.from_strings("0", "0", "0", "0", n_intervals=16)
    rng = np.random.default_rng(0)
    u = SystemState.from_arrays(rng.normal(size=17), 1.5, rng.normal(size=17), -2.0)
    Tu = apply_T(u, p)
    assert np.all(Tu.x.values == 1.5) and np.all(Tu.y.values == -2.0)
    assert Tu.a == 0.0 and Tu.b == 0.0


def test_T_depends_on_functional_values_only_when_dynamics_vanish():
    p = ProblemSpec.from_strings("0", "0", "x(0.5)", "int(y)", n_intervals=16)
    t = nodes(16)
    # both y profiles integrate to 0.5, both x pass through 0.25 at t = 1/2
    u = SystemState.from_arrays(0.5 * t, 1.0, t, 2.0)
    v = SystemState.from_arrays(np.sin(np.pi * t) * 0.25, 1.0, np.full(17, 0.5), 2.0)
    Tu, Tv = apply_T(u, p), apply_T(v, p)
    assert vector_distance(Tu, Tv, 2.0).tolist() == [0.0, 0.0]


def test_T_errors():
    p = ProblemSpec.from_strings("exp(x)", "0", "0", "0", n_intervals=8)
    with pytest.raises(GridMismatch):
        apply_T(SystemState.zero(16), p)
    big = SystemState.from_arrays(np.full(9, 1000.0), 0.0, np.zeros(9), 0.0)
    with pytest.raises(NonFiniteState):
        apply_T(big, p)


def test_residual_examples():
    p = ProblemSpec.from_strings("1", "0", "0", "0", n_intervals=32)
    t = nodes(32)
    r = residual(SystemState.from_arrays(t, 0.0, np.zeros(33), 0.0), p)
    assert r.ode1 < 1e-12 and r.nl1 == 0.0 and r.worst < 1e-12

    p = ProblemSpec.from_strings("0.25*sin(x) + a*y", "cos(a*x + 0.25*y)",
                                 "0.125*sin(x(0.25) + y(0.25))", "0.125*cos(x(0.25) + y(0.25))", {"a": 0.1})
    assert residual(SystemState.zero(p.n_intervals), p).nl2 == 0.125


def test_residual_ignores_end_points():
    p = ProblemSpec.from_strings("0", "0", "0", "0", n_intervals=16)
    x = np.zeros(17)
    x[0] = x[-1] = 5.0  # only the end values are off; x(0) = 5 still violates alpha = 0
    r = residual(SystemState.from_arrays(x, 0.0, np.zeros(17), 0.0), p)
    assert r.ode1 == pytest.approx(5.0 * 16 / 2)  # seen through the neighbouring central stencils
    assert r.nl1 == 5.0


def test_residual_measures_second_order_defect():
    p = ProblemSpec.from_strings("2*t", "0", "0", "0", n_intervals=16)
    t = nodes(16)
    # central differences are exact on quadratics
    r = residual(SystemState.from_arrays(t * t, 0.0, np.zeros(17), 0.0), p)
    assert r.ode1 < 1e-12


def test_solved_state_is_a_fixed_point(ex1, ex1_perov):
    u = ex1_perov.state
    assert np.all(vector_distance(apply_T(u, ex1), u, ex1.theta) <= ex1.tolerance)
    assert ex1_perov.residuals.worst <= 1e-4


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.24), st.floats(0.5, 4.0), st.integers(0, 2**32 - 1))
def test_discrete_contraction(a, theta, seed):
    p = example("ex1", a=a, grid=64, theta=theta)
    M = build_M_theta(p.declared_lipschitz, theta).entries
    rng = np.random.default_rng(seed)
    for _ in range(20):
        u = SystemState.from_arrays(rng.uniform(-10, 10, 65), rng.uniform(-10, 10),
                                    rng.uniform(-10, 10, 65), rng.uniform(-10, 10))
        v = SystemState.from_arrays(rng.uniform(-10, 10, 65), rng.uniform(-10, 10),
                                    rng.uniform(-10, 10, 65), rng.uniform(-10, 10))
        lhs = vector_distance(apply_T(u, p), apply_T(v, p), theta)
        assert np.all(lhs <= M @ vector_distance(u, v, theta) + 1e-12)


def test_lipschitz_constants_stay_declared():
    p = example("ex1", a=-0.2)
    assert p.declared_lipschitz == LipschitzSpec(0.25, 0.2, 0.2, 0.25, 0.125, 0.125, 0.125, 0.125)
