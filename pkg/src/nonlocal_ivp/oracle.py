"""Brute-force reference solutions by shooting.

For trial initial values ``(a, b)`` the initial value problem is integrated
with classical RK4, and the nonlocal conditions become the two-dimensional
root problem

    F(a, b) = (alpha[x, y] - a, beta[x, y] - b) = 0,

solved by damped Newton with a forward-difference Jacobian.  Nothing here
touches the fixed-point operator or the fixed-point solvers, so agreement
between the two routes is an independent check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EvalError, NoRoot, NonFiniteState
from .expr import eval_functional
from .problem import ProblemSpec
from .space import AugmentedState, GridFunction, SystemState

_BLOWUP = 1e100


@dataclass(frozen=True)
class ShootResult:
    a: float
    b: float
    x: GridFunction
    y: GridFunction
    mismatch: tuple
    newton_steps: int
    start: tuple = (0.0, 0.0)

    @property
    def mismatch_norm(self) -> float:
        return max(abs(m) for m in self.mismatch)

    def to_state(self) -> SystemState:
        return SystemState(AugmentedState(self.x, self.a), AugmentedState(self.y, self.b))


def integrate_ivp(p: ProblemSpec, a: float, b: float):
    """RK4 on the problem's uniform grid from ``(x(0), y(0)) = (a, b)``."""
    n = p.n_intervals
    h = 1.0 / n
    f1, f2 = p.f1.compiled, p.f2.compiled
    env = dict(p.params)

    def rhs(t, x, y):
        env["t"], env["x"], env["y"] = t, x, y
        return f1(env), f2(env)

    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    x, y = float(a), float(b)
    xs[0], ys[0] = x, y
    try:
        for i in range(n):
            t = i * h
            k1x, k1y = rhs(t, x, y)
            k2x, k2y = rhs(t + 0.5 * h, x + 0.5 * h * k1x, y + 0.5 * h * k1y)
            k3x, k3y = rhs(t + 0.5 * h, x + 0.5 * h * k2x, y + 0.5 * h * k2y)
            k4x, k4y = rhs(t + h, x + h * k3x, y + h * k3y)
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            if not (abs(x) < _BLOWUP and abs(y) < _BLOWUP):
                raise NonFiniteState(f"trajectory from (a, b) = ({a!r}, {b!r}) blew up at t = {t + h:.6g}")
            xs[i + 1], ys[i + 1] = x, y
    except (ValueError, OverflowError) as exc:
        raise NonFiniteState(f"trajectory from (a, b) = ({a!r}, {b!r}) is not finite: {exc}") from None
    return GridFunction(xs), GridFunction(ys)


def _mismatch(p, z):
    x, y = integrate_ivp(p, z[0], z[1])
    F = np.array([
        eval_functional(p.alpha, x, y, p.params) - z[0],
        eval_functional(p.beta, x, y, p.params) - z[1],
    ])
    return F, x, y


def _newton(p, start, tol, max_steps):
    z = np.array(start, dtype=float)
    F, x, y = _mismatch(p, z)
    for step in range(max_steps + 1):
        if np.max(np.abs(F)) <= tol:
            return ShootResult(float(z[0]), float(z[1]), x, y, (float(F[0]), float(F[1])), step, tuple(start))
        if step == max_steps:
            break
        J = np.empty((2, 2))
        for j in range(2):
            dz = np.zeros(2)
            dz[j] = 1e-6 * (1.0 + abs(z[j]))
            Fj, _, _ = _mismatch(p, z + dz)
            J[:, j] = (Fj - F) / dz[j]
        try:
            s = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            s = np.linalg.lstsq(J, -F, rcond=None)[0]
        norm0 = np.linalg.norm(F)
        lam = 1.0
        while True:
            try:
                F_new, x_new, y_new = _mismatch(p, z + lam * s)
                if np.linalg.norm(F_new) <= (1.0 - 1e-4 * lam) * norm0:
                    break
            except (NonFiniteState, EvalError):
                pass
            lam *= 0.5
            if lam < 1e-10:
                return None
        z = z + lam * s
        F, x, y = F_new, x_new, y_new
    return None


def solve_nonlocal(p: ProblemSpec, start=(0.0, 0.0), tol: float = 1e-10, radii=None,
                   max_steps: int = 50) -> ShootResult:
    """Find ``(a, b)`` whose RK4 trajectory satisfies the nonlocal conditions.

    Tries ``start`` first.  If that fails, runs Newton from every point of a
    5x5 grid over ``[-R1, R1] x [-R2, R2]`` (``radii`` when given, else
    ``[-10, 10]^2``) and keeps the success with the smallest mismatch.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    attempt = _try(p, start, tol, max_steps)
    if attempt is not None:
        return attempt
    R1, R2 = (10.0, 10.0) if radii is None else (float(radii[0]), float(radii[1]))
    successes = []
    for ga, gb in itertools.product(np.linspace(-R1, R1, 5), np.linspace(-R2, R2, 5)):
        res = _try(p, (float(ga), float(gb)), tol, max_steps)
        if res is not None:
            successes.append(res)
    if not successes:
        raise NoRoot(f"Newton failed from {tuple(start)} and from all 25 grid starts")
    return min(successes, key=lambda r: (r.mismatch_norm, r.start))


def _try(p, start, tol, max_steps):
    try:
        return _newton(p, start, tol, max_steps)
    except (NonFiniteState, EvalError):
        return None
    except FloatingPointError:
        return None


def rk4_error_ratio(n_coarse: int = 64) -> float:
    """Error reduction of RK4 on ``x' = y, y' = -x`` when the grid is doubled."""
    errs = []
    for n in (n_coarse, 2 * n_coarse):
        p = ProblemSpec.from_strings("y", "-x", "1", "0", n_intervals=n)
        x, _ = integrate_ivp(p, 1.0, 0.0)
        errs.append(abs(x.values[-1] - math.cos(1.0)))
    return errs[0] / errs[1]
