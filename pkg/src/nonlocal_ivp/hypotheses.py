"""Checkable hypotheses behind the existence and uniqueness results.

* the Lipschitz/growth matrix ``M_theta`` and a search over ``theta``;
* invariant-ball radii ``R = (I - M_theta)^-1 (c1 + theta*C1, c2 + theta*C2)``;
* an a-priori bound for the monotone map built from Caratheodory bounds;
* randomized falsification of user-declared constants.

Declared constants are never proved here, only tested: a falsifier that
finds nothing is evidence, not a certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvalError, NoBoundFound, NotConvergent
from .expr import eval_functional
from .matrix import DEFAULT_BOUNDARY_BAND, NonnegMatrix, spectral_radius
from .operator import apply_T
from .problem import CaratheodoryGrowthSpec, GrowthSpec, LipschitzSpec, ProblemSpec
from .space import GridFunction, SystemState, ThetaWeight, nodes, state_norms

__all__ = [
    "LipschitzSpec", "GrowthSpec", "CaratheodoryGrowthSpec",
    "build_M_theta", "find_theta", "ThetaSearch", "row_sum_sufficient_check",
    "schauder_radii", "ball_invariance_check", "InvarianceReport",
    "apriori_bound", "AprioriBound", "falsify_constants", "Counterexample",
]


def _theta(w) -> float:
    return w.theta if isinstance(w, ThetaWeight) else ThetaWeight(w).theta


def build_M_theta(L: LipschitzSpec | GrowthSpec, w) -> NonnegMatrix:
    """``[[max(1/th, a1 + th*A1), b1 + th*B1], [a2 + th*A2, max(1/th, b2 + th*B2)]]``."""
    th = _theta(w)
    return NonnegMatrix([
        [max(1.0 / th, L.a1 + th * L.A1), L.b1 + th * L.B1],
        [L.a2 + th * L.A2, max(1.0 / th, L.b2 + th * L.B2)],
    ])


# -----------------------------------------------------------------------------
# theta search
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaSearch:
    theta: float
    rho: float
    convergent: bool


_THETA_GRID = np.logspace(-3.0, 3.0, 200)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def find_theta(L: LipschitzSpec | GrowthSpec, boundary_band: float = DEFAULT_BOUNDARY_BAND) -> ThetaSearch:
    """Minimise ``rho(M_theta)`` over ``theta in [1e-3, 1e3]``.

    A 200-point log grid locates the best neighbourhood; golden-section
    search in ``log(theta)`` then refines between the adjacent grid points.
    """
    def rho_at(log_th):
        return spectral_radius(build_M_theta(L, math.exp(log_th)))

    rhos = np.array([spectral_radius(build_M_theta(L, th)) for th in _THETA_GRID])
    i = int(np.argmin(rhos))
    best_log, best_rho = math.log(_THETA_GRID[i]), float(rhos[i])

    lo = math.log(_THETA_GRID[max(i - 1, 0)])
    hi = math.log(_THETA_GRID[min(i + 1, len(_THETA_GRID) - 1)])
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = rho_at(c), rho_at(d)
    while hi - lo > 1e-12:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = rho_at(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = rho_at(d)
    for cand in (lo, hi, 0.5 * (lo + hi)):
        r = rho_at(cand)
        if r < best_rho:
            best_log, best_rho = cand, r

    theta = math.exp(best_log)
    rho = spectral_radius(build_M_theta(L, theta))
    return ThetaSearch(theta=theta, rho=rho, convergent=rho < 1.0 - boundary_band)


def row_sum_sufficient_check(M) -> bool:
    """True iff every row sum of the 2x2 matrix is below one.

    This is sufficient for convergence to zero (``rho <= max row sum``) but
    not necessary.
    """
    A = np.asarray(M, dtype=float)
    if A.shape != (2, 2):
        raise ValueError(f"row-sum check is defined for 2x2 matrices, got shape {A.shape}")
    return bool(np.all(A.sum(axis=1) < 1.0))


# -----------------------------------------------------------------------------
# invariant ball
# -----------------------------------------------------------------------------

def schauder_radii(G: GrowthSpec, w, boundary_band: float = DEFAULT_BOUNDARY_BAND):
    """Radii ``(R1, R2) = (I - M_theta)^-1 (c1 + theta*C1, c2 + theta*C2)``."""
    th = _theta(w)
    M = build_M_theta(G, th)
    rho = spectral_radius(M)
    if not rho < 1.0 - boundary_band:
        raise NotConvergent(f"M_theta at theta={th!r} has spectral radius {rho!r}; no invariant ball")
    rhs = np.array([G.c1 + th * G.C1, G.c2 + th * G.C2])
    R = np.linalg.solve(np.eye(2) - M.entries, rhs)
    return float(R[0]), float(R[1])


@dataclass(frozen=True)
class InvarianceReport:
    holds: bool
    samples: int
    worst_excess: float
    counterexample: SystemState | None = None

    def __bool__(self):
        return self.holds


def _random_grid_function(rng, n_intervals):
    """Random trigonometric polynomial of degree <= 5 with sup norm 1 (or zero)."""
    t = nodes(n_intervals)
    degree = int(rng.integers(0, 6))
    v = np.full_like(t, rng.normal())
    for k in range(1, degree + 1):
        v += rng.normal() * np.cos(2 * np.pi * k * t) + rng.normal() * np.sin(2 * np.pi * k * t)
    peak = np.max(np.abs(v))
    return v / peak if peak > 0 else v


def _random_component(rng, n_intervals, radius, theta):
    """Random ``(x, a)`` with ``|x|_C + theta*|a| <= radius``."""
    budget = radius * (1.0 if rng.random() < 0.5 else rng.random())
    share = rng.choice([0.0, 1.0, rng.random()])
    x = _random_grid_function(rng, n_intervals) * budget * share
    a = rng.choice([-1.0, 1.0]) * budget * (1.0 - share) / theta
    return x, a


def ball_invariance_check(p: ProblemSpec, R, samples: int = 200, seed: int | None = None,
                          slack: float = 1e-9) -> InvarianceReport:
    """Sample states in the ball ``|x_a| <= R1, |y_b| <= R2`` and test ``T(u)`` stays inside."""
    R = np.asarray(R, dtype=float)
    if not np.all(np.isfinite(R)):
        raise ValueError("radii must be finite")
    th = p.theta.theta
    rng = np.random.default_rng(p.seed if seed is None else seed)
    worst = -math.inf
    for _ in range(samples):
        x, a = _random_component(rng, p.n_intervals, R[0], th)
        y, b = _random_component(rng, p.n_intervals, R[1], th)
        u = SystemState.from_arrays(x, a, y, b)
        excess = state_norms(apply_T(u, p), th) - R
        worst = max(worst, float(excess.max()))
        if np.any(excess > slack):
            return InvarianceReport(False, samples, worst, u)
    return InvarianceReport(True, samples, worst)


# -----------------------------------------------------------------------------
# a-priori bound from Caratheodory growth
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class AprioriBound:
    R0: tuple | None
    scalar_bounds: tuple | None
    certified_region_only: bool
    iterations: int
    cap: tuple
    sweep_violation: tuple | None = None
    monotone_violation: tuple | None = None


def _phi(cg, s, rho):
    """The monotone map ``rho -> (int omega1 + omega3, int omega2 + omega4)``."""
    r1, r2 = float(rho[0]), float(rho[1])
    env = {**cg.params, "t": s, "r1": r1, "r2": r2}
    h = s[1] - s[0]
    out = []
    for w_int, w_fun in ((cg.omega1, cg.omega3), (cg.omega2, cg.omega4)):
        vals = w_int.evaluate(env)
        integral = h * (vals.sum() - 0.5 * (vals[0] + vals[-1]))
        out.append(integral + w_fun.evaluate({**cg.params, "r1": r1, "r2": r2}))
    return np.array(out)


def apriori_bound(cg: CaratheodoryGrowthSpec, cap=None, grid: int = 41, quad_intervals: int = 256,
                  tol: float = 1e-12, max_iter: int = 100_000) -> AprioriBound:
    """A-priori bound ``R0`` with ``rho <= Phi(rho) => rho <= R0`` on ``[0, cap]^2``.

    Iterates ``Phi`` from zero; the iterates increase monotonically to the
    least fixed point, which is returned as ``R0``.  A ``grid x grid`` sweep
    of ``[0, cap1] x [0, cap2]`` then looks for points with ``rho <= Phi(rho)``
    outside ``[0, R0]``; if one exists ``R0`` is withdrawn (``None``).  The
    conclusion only covers the capped region.
    """
    cap = np.asarray(cg.cap if cap is None else cap, dtype=float)
    if cap.shape != (2,) or not np.all(cap > 0):
        raise ValueError("cap must be a pair of positive numbers")
    s = nodes(quad_intervals)

    rho = np.zeros(2)
    for k in range(1, max_iter + 1):
        nxt = _phi(cg, s, rho)
        if not np.all(np.isfinite(nxt)) or np.any(nxt > cap):
            raise NoBoundFound(f"iterates left the region [0, cap] = [0, {cap.tolist()}] at step {k}: {nxt.tolist()}")
        done = np.max(np.abs(nxt - rho)) <= tol * (1.0 + np.max(np.abs(nxt)))
        rho = nxt
        if done:
            break
    else:
        raise NoBoundFound(f"iterates did not settle within {max_iter} steps")

    violation = None
    r1s, r2s = np.linspace(0.0, cap[0], grid), np.linspace(0.0, cap[1], grid)
    edge = rho * (1.0 + 1e-9) + 1e-12
    for r1 in r1s:
        for r2 in r2s:
            pt = np.array([r1, r2])
            if np.all(pt <= edge):
                continue
            if np.all(pt <= _phi(cg, s, pt)):
                violation = (float(r1), float(r2))
                break
        if violation:
            break

    mono = _monotone_violation(cg, s, cap)
    R0 = None if violation else (float(rho[0]), float(rho[1]))
    scalar = None
    if R0 is not None:
        env = {**cg.params, "r1": R0[0], "r2": R0[1]}
        scalar = (cg.omega3.evaluate(env), cg.omega4.evaluate(env))
    return AprioriBound(R0, scalar, True, k, (float(cap[0]), float(cap[1])), violation, mono)


def _monotone_violation(cg, s, cap, samples=200, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        p = rng.uniform(0, 1, 2) * cap
        q = p + rng.uniform(0, 1, 2) * (cap - p)
        if np.any(_phi(cg, s, q) < _phi(cg, s, p) - 1e-12):
            return (tuple(p.tolist()), tuple(q.tolist()))
    return None


# -----------------------------------------------------------------------------
# falsification of declared constants
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Counterexample:
    kind: str
    target: str
    point: dict
    lhs: float
    rhs: float

    def __str__(self):
        pts = ", ".join(f"{k}={v:.6g}" for k, v in self.point.items())
        return f"{self.kind} bound for {self.target} fails at {pts}: {self.lhs:.6g} > {self.rhs:.6g}"


def _targeted(rng, n, box):
    """Mix of uniform samples in ``[-box, box]`` and log-uniform magnitudes near 0."""
    uniform = rng.uniform(-box, box, n)
    mags = 10.0 ** rng.uniform(-12.0, math.log10(box), n)
    logs = rng.choice([-1.0, 1.0], n) * mags
    return np.where(rng.random(n) < 0.5, uniform, logs)


def _perturb(rng, base, box):
    n = base.size
    rel = np.abs(base) * 10.0 ** rng.uniform(-12.0, 0.0, n)
    absolute = 10.0 ** rng.uniform(-12.0, math.log10(box), n)
    step = np.where(rng.random(n) < 0.5, rel, absolute) * rng.choice([-1.0, 1.0], n)
    choice = rng.random(n)
    # a quarter unchanged (isolates the other variable), a quarter independent
    out = np.where(choice < 0.25, base, base + step)
    return np.where(choice > 0.75, rng.uniform(-box, box, n), out)


def _eval_pointwise(e, params, t, x, y):
    env = dict(params)
    env.update(t=t, x=x, y=y)
    try:
        return np.asarray(e.evaluate(env), dtype=float)
    except EvalError:
        out = np.full(t.shape, np.nan)
        for i in range(t.size):
            env.update(t=float(t[i]), x=float(x[i]), y=float(y[i]))
            try:
                out[i] = e.evaluate(env)
            except EvalError:
                pass
        return out


def falsify_constants(p: ProblemSpec, kind: str, samples: int = 10_000, box: float = 100.0,
                      seed: int | None = None) -> Counterexample | None:
    """Search for a sample violating the declared Lipschitz or growth inequalities.

    Right-hand sides are probed at ``samples`` random points; the functionals
    at ``max(1, samples // 10)`` random pairs of trigonometric-polynomial grid
    functions.  Returns the first violation found, or ``None``.
    """
    if kind == "lipschitz":
        spec = p.declared_lipschitz
    elif kind == "growth":
        spec = p.declared_growth
    else:
        raise ValueError(f"kind must be 'lipschitz' or 'growth', got {kind!r}")
    if spec is None:
        raise ValueError(f"problem declares no {kind} constants")
    rng = np.random.default_rng(p.seed if seed is None else seed)

    t = rng.uniform(0.0, 1.0, samples)
    x = _targeted(rng, samples, box)
    y = _targeted(rng, samples, box)
    fs = {"f1": (p.f1, "a1", "b1", "c1"), "f2": (p.f2, "a2", "b2", "c2")}
    if kind == "lipschitz":
        xb, yb = _perturb(rng, x, box), _perturb(rng, y, box)
        for name, (e, ka, kb, _) in fs.items():
            v, vb = _eval_pointwise(e, p.params, t, x, y), _eval_pointwise(e, p.params, t, xb, yb)
            lhs = np.abs(v - vb)
            rhs = getattr(spec, ka) * np.abs(x - xb) + getattr(spec, kb) * np.abs(y - yb)
            bad = np.nonzero(lhs > rhs + 1e-12 * (1.0 + np.abs(v) + np.abs(vb)))[0]
            if bad.size:
                i = int(bad[0])
                return Counterexample(kind, name, {"t": t[i], "x": x[i], "y": y[i], "xbar": xb[i], "ybar": yb[i]},
                                      float(lhs[i]), float(rhs[i]))
    else:
        for name, (e, ka, kb, kc) in fs.items():
            v = _eval_pointwise(e, p.params, t, x, y)
            lhs = np.abs(v)
            rhs = getattr(spec, ka) * np.abs(x) + getattr(spec, kb) * np.abs(y) + getattr(spec, kc)
            bad = np.nonzero(lhs > rhs + 1e-12 * (1.0 + lhs))[0]
            if bad.size:
                i = int(bad[0])
                return Counterexample(kind, name, {"t": t[i], "x": x[i], "y": y[i]}, float(lhs[i]), float(rhs[i]))

    return _falsify_functionals(p, spec, kind, rng, max(1, samples // 10), box)


def _random_amplitude(rng, box):
    if rng.random() < 0.5:
        return rng.uniform(0.0, box)
    return 10.0 ** rng.uniform(-12.0, math.log10(box))


def _falsify_functionals(p, spec, kind, rng, n_pairs, box):
    n = p.n_intervals
    fns = {"alpha": (p.alpha, "A1", "B1", "C1"), "beta": (p.beta, "A2", "B2", "C2")}
    for _ in range(n_pairs):
        x = _random_grid_function(rng, n) * _random_amplitude(rng, box)
        y = _random_grid_function(rng, n) * _random_amplitude(rng, box)
        gx, gy = GridFunction(x), GridFunction(y)
        if kind == "lipschitz":
            xb = x if rng.random() < 0.25 else x + _random_grid_function(rng, n) * _random_amplitude(rng, box)
            yb = y if rng.random() < 0.25 else y + _random_grid_function(rng, n) * _random_amplitude(rng, box)
            gxb, gyb = GridFunction(xb), GridFunction(yb)
            dx, dy = float(np.max(np.abs(x - xb))), float(np.max(np.abs(y - yb)))
        for name, (e, kA, kB, kC) in fns.items():
            try:
                v = eval_functional(e, gx, gy, p.params)
                if kind == "lipschitz":
                    vb = eval_functional(e, gxb, gyb, p.params)
            except EvalError:
                continue
            if kind == "lipschitz":
                lhs = abs(v - vb)
                rhs = getattr(spec, kA) * dx + getattr(spec, kB) * dy
                scale = 1.0 + abs(v) + abs(vb)
            else:
                lhs = abs(v)
                rhs = getattr(spec, kA) * np.max(np.abs(x)) + getattr(spec, kB) * np.max(np.abs(y)) + getattr(spec, kC)
                scale = 1.0 + lhs
            if lhs > rhs + 1e-12 * scale:
                point = {"sup|x|": float(np.max(np.abs(x))), "sup|y|": float(np.max(np.abs(y)))}
                if kind == "lipschitz":
                    point.update({"sup|x-xbar|": dx, "sup|y-ybar|": dy})
                return Counterexample(kind, name, point, float(lhs), float(rhs))
    return None
