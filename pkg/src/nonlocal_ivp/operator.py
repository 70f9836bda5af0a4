"""The fixed-point operator ``T = (T1, T2)`` and defect residuals.

Writing ``x(0) = a``, ``y(0) = b`` turns the nonlocal problem into the fixed
point equation ``u = T(u)`` on pairs ``u = ((x, a), (y, b))`` with

    T1(u) = (a + int_0^t f1(s, x(s), y(s)) ds,  alpha[x, y])
    T2(u) = (b + int_0^t f2(s, x(s), y(s)) ds,  beta[x, y])

The integrals use cumulative composite trapezoid sums.  Trapezoid weights are
positive, so ``|int g| <= int |g| <= sup|g|`` holds exactly on the grid and
Lipschitz estimates for ``T`` carry over to the discrete operator unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, NonFiniteState
from .expr import eval_functional
from .problem import (  # noqa: F401  (re-exported)
    CaratheodoryGrowthSpec,
    GrowthSpec,
    LipschitzSpec,
    ProblemSpec,
)
from .space import AugmentedState, GridFunction, SystemState, nodes


def cumulative_integral(g: GridFunction) -> GridFunction:
    """``out(t_i) = sum_{j<i} h/2 (g_j + g_{j+1})`` with ``out(0) = 0``."""
    v = g.values
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(0.5 * g.h * (v[:-1] + v[1:]), out=out[1:])
    return GridFunction(out)


def rhs_on_grid(p: ProblemSpec, x: np.ndarray, y: np.ndarray):
    """Evaluate ``f1, f2`` at every node for the node values ``x, y``."""
    env = dict(p.params)
    env.update(t=nodes(x.size - 1), x=x, y=y)
    return p.f1.evaluate(env), p.f2.evaluate(env)


def apply_T(u: SystemState, p: ProblemSpec) -> SystemState:
    if u.n_intervals != p.n_intervals:
        raise GridMismatch(f"state on N={u.n_intervals}, problem on N={p.n_intervals}")
    g1, g2 = rhs_on_grid(p, u.x.values, u.y.values)
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
        raise NonFiniteState("right-hand side is not finite on the current iterate")
    x_new = u.a + cumulative_integral(GridFunction(g1)).values
    y_new = u.b + cumulative_integral(GridFunction(g2)).values
    a_new = eval_functional(p.alpha, u.x, u.y, p.params)
    b_new = eval_functional(p.beta, u.x, u.y, p.params)
    return SystemState(
        AugmentedState(GridFunction(x_new), a_new),
        AugmentedState(GridFunction(y_new), b_new),
    )


@dataclass(frozen=True)
class Residuals:
    ode1: float
    ode2: float
    nl1: float
    nl2: float

    @property
    def worst(self) -> float:
        return max(self.ode1, self.ode2, self.nl1, self.nl2)

    def as_dict(self) -> dict:
        return {"ode1": self.ode1, "ode2": self.ode2, "nl1": self.nl1, "nl2": self.nl2}


def residual(u: SystemState, p: ProblemSpec) -> Residuals:
    """Defects of ``u`` in the differential equations and nonlocal conditions.

    The derivative defects use second-order central differences and are
    measured at interior nodes only.
    """
    if u.n_intervals != p.n_intervals:
        raise GridMismatch(f"state on N={u.n_intervals}, problem on N={p.n_intervals}")
    h = 1.0 / p.n_intervals
    x, y = u.x.values, u.y.values
    g1, g2 = rhs_on_grid(p, x, y)
    dx = (x[2:] - x[:-2]) / (2.0 * h)
    dy = (y[2:] - y[:-2]) / (2.0 * h)
    return Residuals(
        ode1=float(np.max(np.abs(dx - g1[1:-1]))),
        ode2=float(np.max(np.abs(dy - g2[1:-1]))),
        nl1=abs(float(x[0]) - eval_functional(p.alpha, u.x, u.y, p.params)),
        nl2=abs(float(y[0]) - eval_functional(p.beta, u.x, u.y, p.params)),
    )
