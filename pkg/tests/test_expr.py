import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_ivp.errors import (
    AbscissaOutOfRange,
    DivisionByZero,
    DomainError,
    ExpressionSyntaxError,
    FreeTimeVariable,
    GridMismatch,
    UnknownIdentifier,
)
from nonlocal_ivp.expr import (
    BinOp,
    Call,
    Integral,
    Neg,
    Num,
    Param,
    PointEval,
    SupNorm,
    Var,
    eval_functional,
    eval_scalar,
    parse_functional,
    parse_scalar,
    to_source,
)
from nonlocal_ivp.space import GridFunction


def ev(src, t=0.0, x=0.0, y=0.0, **params):
    return eval_scalar(parse_scalar(src), t, x, y, params)


# --- scalar expressions ---------------------------------------------------------

@pytest.mark.parametrize("src, value", [
    ("2+3*4", 14.0),
    ("2^3^2", 512.0),
    ("-2^2", -4.0),
    ("(-2)^2", 4.0),
    ("8/4/2", 1.0),
    ("10-4-3", 3.0),
    ("2*-3", -6.0),
    ("1.5e2 + 2E-1", 150.2),
    ("min(3, 1, 2) + max(4)", 5.0),
    ("abs(-2) + sqrt(9) + exp(0)", 6.0),
    ("−3 + 1", -2.0),
])
def test_arithmetic_and_precedence(src, value):
    assert ev(src) == pytest.approx(value, abs=1e-15)


def test_right_hand_side_examples():
    assert ev("0.25*sin(x) + a*y + t", t=0, x=0, y=1, a=0.1) == pytest.approx(0.1)
    assert ev("cos(a*x + 0.25*y)", a=0.1) == 1.0


@pytest.mark.parametrize("src", ["x*sin(y/x)", "x*cos(y/x)", "(x)*sin((y)/(x))"])
def test_removable_singularity(src):
    assert ev(src, x=0.0, y=1.7) == 0.0
    assert ev(src, x=0.5, y=1.7) == pytest.approx(
        0.5 * (math.sin if "sin" in src else math.cos)(1.7 / 0.5))


def test_removable_rule_is_strictly_syntactic():
    with pytest.raises(DivisionByZero):
        ev("y*sin(y/x)", x=0.0, y=1.0)
    with pytest.raises(DivisionByZero):
        ev("0.25*x*sin(y/x)", x=0.0, y=1.0)  # parses as (0.25*x)*sin(...), not the pattern
    assert ev("0.25*(x*sin(y/x))", x=0.0, y=1.0) == 0.0


def test_removable_rule_in_array_backend():
    e = parse_scalar("x*sin(y/x)")
    x = np.array([0.0, 1.0, -2.0])
    y = np.array([3.0, 3.0, 3.0])
    out = e.evaluate({"t": 0.0, "x": x, "y": y})
    np.testing.assert_allclose(out, [0.0, math.sin(3.0), -2.0 * math.sin(-1.5)])


def test_array_and_scalar_backends_agree():
    e = parse_scalar("0.25*(x*sin(y/x)) + a*(y*cos(x/y)) + exp(-t)*abs(x) - min(x, y)^2")
    rng = np.random.default_rng(0)
    t, x, y = rng.uniform(0, 1, 50), rng.normal(size=50), rng.normal(size=50)
    arr = e.evaluate({"t": t, "x": x, "y": y, "a": 0.3})
    for i in range(50):
        assert arr[i] == pytest.approx(eval_scalar(e, t[i], x[i], y[i], {"a": 0.3}), rel=1e-14, abs=1e-15)


def test_evaluation_errors():
    with pytest.raises(DivisionByZero):
        ev("1/x")
    with pytest.raises(DomainError):
        ev("sqrt(x)", x=-1.0)
    with pytest.raises(UnknownIdentifier):
        ev("a*x")


def test_overflow_is_not_an_error():
    assert ev("exp(1000)") == math.inf


@pytest.mark.parametrize("src, offset", [
    ("2 +", 3),
    ("(1 + 2", 6),
    ("1 2", 2),
    ("sin(", 4),
    ("1 $ 2", 2),
])
def test_syntax_errors_report_offset(src, offset):
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_scalar(src)
    assert exc.value.offset == offset
    assert str(offset) in str(exc.value)


def test_syntax_error_lists_expected_tokens():
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_scalar("2 *")
    assert "number" in exc.value.expected
    assert "(" in exc.value.expected


def test_offsets_are_in_bytes():
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_scalar("−1 +")  # the minus sign takes 3 bytes in UTF-8
    assert exc.value.offset == 6


def test_unknown_names_with_declared_params():
    with pytest.raises(UnknownIdentifier):
        parse_scalar("a*x + b", params={"a"})
    with pytest.raises(UnknownIdentifier):
        parse_scalar("tan(x)")
    assert parse_scalar("a*x", params={"a"}).parameters == {"a"}


def test_wrong_arity():
    with pytest.raises(ExpressionSyntaxError):
        parse_scalar("sin(x, y)")


# --- functionals ---------------------------------------------------------------

def grid(fn, n=1024):
    return GridFunction.from_callable(fn, n)


ZERO = GridFunction.constant(0.0, 1024)


def test_nonlocal_conditions_at_zero():
    alpha = parse_functional("0.125*sin(x(0.25)+y(0.25))")
    beta = parse_functional("0.125*cos(x(0.25)+y(0.25))")
    assert eval_functional(alpha, ZERO, ZERO) == 0.0
    assert eval_functional(beta, ZERO, ZERO) == 0.125


def test_functional_atoms():
    t = grid(lambda s: s)
    assert eval_functional(parse_functional("int(x)"), t, ZERO) == pytest.approx(0.5, abs=1e-15)
    assert eval_functional(parse_functional("supnorm(x)"), GridFunction.constant(-3.0, 1024), ZERO) == 3.0
    assert eval_functional(parse_functional("int(y)"), ZERO, grid(lambda s: s * s)) == pytest.approx(1 / 3, abs=1e-5)
    assert eval_functional(parse_functional("x(0.25)"), GridFunction.from_callable(lambda s: s, 4),
                           GridFunction.constant(0.0, 4)) == 0.25


def test_point_evaluation_is_exact_on_piecewise_linear():
    # piecewise-linear data between nodes: interpolation reproduces it exactly
    n = 8
    x = GridFunction.from_callable(lambda s: 3 * s - 1, n)
    for c in (0.0, 0.1, 0.3, 0.55, 0.99, 1.0):
        e = parse_functional(f"x({c})")
        assert eval_functional(e, x, x) == pytest.approx(3 * c - 1, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=9, max_size=9), st.lists(st.floats(-5, 5), min_size=9, max_size=9))
def test_linear_functional_is_additive(u, v):
    e = parse_functional("2*x(0.25) - 0.5*x(0.3) + 3*y(1) + int(x)")
    u, v = np.array(u), np.array(v)
    gu, gv, guv = GridFunction(u), GridFunction(v), GridFunction(u + v)
    lhs = eval_functional(e, guv, guv)
    rhs = eval_functional(e, gu, gu) + eval_functional(e, gv, gv)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("src, err", [
    ("x(1.5)", AbscissaOutOfRange),
    ("x(-0.25)", AbscissaOutOfRange),
    ("x(0.5) + t", FreeTimeVariable),
    ("x + 1", ExpressionSyntaxError),
    ("int(x + y)", ExpressionSyntaxError),
])
def test_functional_parse_errors(src, err):
    with pytest.raises(err):
        parse_functional(src)


def test_abscissa_may_be_a_constant_expression():
    e = parse_functional("x(1/4)")
    assert e.abscissae == (0.25,)


def test_functional_grid_mismatch():
    with pytest.raises(GridMismatch):
        eval_functional(parse_functional("x(0)"), ZERO, GridFunction.constant(0.0, 8))


# --- round trip ---------------------------------------------------------------

numbers = st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False).map(Num)
leaves = st.one_of(numbers, st.sampled_from([Var("t"), Var("x"), Var("y"), Param("a"), Param("k")]))
functional_leaves = st.one_of(
    numbers,
    st.sampled_from([Param("a"), Integral("x"), Integral("y"), SupNorm("x"), SupNorm("y")]),
    st.builds(PointEval, st.sampled_from(["x", "y"]), st.floats(0.0, 1.0)),
)


def trees(leaf, depth):
    if depth == 0:
        return leaf
    sub = trees(leaf, depth - 1)
    return st.one_of(
        leaf,
        st.builds(Neg, sub),
        st.builds(BinOp, st.sampled_from(["+", "-", "*", "/", "^"]), sub, sub),
        st.builds(lambda f, a: Call(f, (a,)), st.sampled_from(["sin", "cos", "exp", "abs", "sqrt"]), sub),
        st.builds(lambda f, args: Call(f, tuple(args)), st.sampled_from(["min", "max"]),
                  st.lists(sub, min_size=1, max_size=3)),
    )


@settings(max_examples=500, deadline=None)
@given(trees(leaves, 6))
def test_scalar_round_trip(tree):
    assert parse_scalar(to_source(tree)).ast == tree


@settings(max_examples=200, deadline=None)
@given(trees(functional_leaves, 4))
def test_functional_round_trip(tree):
    assert parse_functional(to_source(tree)).ast == tree
