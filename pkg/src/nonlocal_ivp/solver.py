"""Fixed-point iteration for ``u = T(u)``.

``perov_solve`` needs a convergent Lipschitz matrix ``M`` and then carries
the componentwise error bounds

    d(u_{k+1}, u*) <= M (I - M)^-1 d(u_k, u_{k+1})        (a posteriori)
    d(u_{k+1}, u*) <= M^{k+1} (I - M)^-1 d(u_0, u_1)       (a priori)

which hold exactly for the discrete operator.  ``picard_solve`` runs the same
iteration with no guarantee at all; it is the natural tool when only growth
bounds (existence, no uniqueness) are available.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EvalError, NonFiniteState, NotContractive, NotConvergent
from .hypotheses import build_M_theta, schauder_radii
from .matrix import NonnegMatrix, Verdict, check_convergent_to_zero, neumann_inverse
from .operator import Residuals, apply_T, residual
from .problem import ProblemSpec
from .space import SystemState, ThetaWeight, state_norms, vector_distance

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
DIVERGED = "diverged"

_DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class PerovCertificate:
    matrix: NonnegMatrix
    iterations: int
    apriori_bound: tuple
    aposteriori_bound: tuple
    theta: float


@dataclass(frozen=True)
class SolveResult:
    state: SystemState
    certificate: PerovCertificate | None
    residuals: Residuals
    iterations: int
    converged: bool
    status: str = CONVERGED
    history: tuple = field(default=(), repr=False)
    inside_ball: bool | None = None
    radii: tuple | None = None


def perov_solve(p: ProblemSpec, u0: SystemState | None = None, tol: float | None = None,
                max_iter: int | None = None) -> SolveResult:
    """Iterate ``T`` until the a-posteriori bound of ``u_{k+1}`` is below ``tol``.

    Stops once ``(I - M)^-1 d(u_k, u_{k+1}) <= tol`` componentwise and returns
    ``u_{k+1}``.  ``history`` holds that vector for every step.
    """
    tol = p.tolerance if tol is None else tol
    max_iter = p.max_iter if max_iter is None else max_iter
    if p.declared_lipschitz is None:
        raise NotContractive("no Lipschitz constants declared; nothing certifies a contraction")
    th = p.theta.theta
    M = build_M_theta(p.declared_lipschitz, th)
    report = check_convergent_to_zero(M)
    if report.verdict is not Verdict.CONVERGENT:
        raise NotContractive(
            f"M_theta at theta={th!r} is not convergent to zero "
            f"(spectral radius {report.spectral_radius!r}, verdict {report.verdict.value})")
    inv = neumann_inverse(M)
    A = M.entries

    u = SystemState.zero(p.n_intervals) if u0 is None else u0
    inv_d0 = None
    power = np.eye(2)
    history = []
    converged = False
    for k in range(max_iter):
        nxt = apply_T(u, p)
        stop_vec = inv @ vector_distance(u, nxt, th)
        if inv_d0 is None:
            inv_d0 = stop_vec
        power = A @ power
        history.append(stop_vec)
        u = nxt
        if np.all(stop_vec <= tol):
            converged = True
            break
    iterations = k + 1

    cert = PerovCertificate(
        matrix=M,
        iterations=iterations,
        apriori_bound=tuple(float(v) for v in power @ inv_d0),
        aposteriori_bound=tuple(float(v) for v in A @ history[-1]),
        theta=th,
    )
    return SolveResult(
        state=u,
        certificate=cert,
        residuals=residual(u, p),
        iterations=iterations,
        converged=converged,
        status=CONVERGED if converged else MAX_ITERATIONS,
        history=tuple(history),
    )


def picard_solve(p: ProblemSpec, u0: SystemState | None = None, tol: float | None = None,
                 max_iter: int | None = None) -> SolveResult:
    """Plain successive approximation; stops when ``d(u_k, u_{k+1}) <= tol``.

    Divergence (weighted norms above 1e12 or a non-finite right-hand side) is
    reported through ``status``, not raised.  With declared growth constants
    and existing radii, ``inside_ball`` records whether every iterate stayed
    inside the invariant ball.
    """
    tol = p.tolerance if tol is None else tol
    max_iter = p.max_iter if max_iter is None else max_iter
    th = p.theta.theta
    radii = None
    if p.declared_growth is not None:
        try:
            radii = schauder_radii(p.declared_growth, th)
        except NotConvergent:
            radii = None
    edge = None if radii is None else np.asarray(radii) * (1.0 + 1e-9) + 1e-9

    u = SystemState.zero(p.n_intervals) if u0 is None else u0
    inside = None if edge is None else bool(np.all(state_norms(u, th) <= edge))
    history = []
    status = MAX_ITERATIONS
    iterations = 0
    for k in range(max_iter):
        try:
            nxt = apply_T(u, p)
        except NonFiniteState:
            status = DIVERGED
            break
        iterations = k + 1
        norms = state_norms(nxt, th)
        if not np.all(norms <= _DIVERGENCE_NORM):
            u = nxt
            status = DIVERGED
            break
        if edge is not None:
            inside = inside and bool(np.all(norms <= edge))
        d = vector_distance(u, nxt, th)
        history.append(d)
        u = nxt
        if np.all(d <= tol):
            status = CONVERGED
            break

    try:
        res = residual(u, p)
    except EvalError:
        res = Residuals(np.inf, np.inf, np.inf, np.inf)
    return SolveResult(
        state=u,
        certificate=None,
        residuals=res,
        iterations=iterations,
        converged=status == CONVERGED,
        status=status,
        history=tuple(history),
        inside_ball=inside,
        radii=radii,
    )


def solve(p: ProblemSpec, u0: SystemState | None = None) -> SolveResult:
    """Dispatch on ``p.solver``."""
    return perov_solve(p, u0) if p.solver == "perov" else picard_solve(p, u0)


def certificate_check(r: SolveResult, oracle_state: SystemState, w=ThetaWeight(),
                      allowance: float = 1e-5) -> bool:
    """True iff ``d(r.state, oracle_state) <= aposteriori_bound + allowance``."""
    if r.certificate is None:
        raise ValueError("result carries no certificate")
    d = vector_distance(r.state, oracle_state, w)
    return bool(np.all(d <= np.asarray(r.certificate.aposteriori_bound) + allowance))
