"""Nonnegative square matrices and the convergent-to-zero property.

A nonnegative matrix ``M`` is convergent to zero when ``M**k -> 0``.  The
classical equivalent characterisations are

(i)   ``M**k -> 0``;
(ii)  ``I - M`` is nonsingular and ``(I - M)^-1 = I + M + M^2 + ...``;
(iii) every eigenvalue of ``M`` lies inside the unit disc;
(iv)  ``I - M`` is nonsingular and its inverse is entrywise nonnegative.

:func:`check_convergent_to_zero` evaluates each of them by a separate
numerical route.  In floating point the equivalence can only be trusted away
from ``rho(M) = 1``, so matrices whose spectral radius falls inside a small
band around one get the verdict ``Boundary`` and are never certified.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DisagreementOutsideBoundary, NotConvergent

DEFAULT_BOUNDARY_BAND = 1e-9
UNBOUNDED = math.inf

_POWER_TINY = 1e-12
_POWER_HUGE = 1e100
_MAX_SQUARINGS = 64
_POWER_ITER_CAP = 10_000
_MARGIN_CAP = 1e6


@dataclass(frozen=True, eq=False)
class NonnegMatrix:
    """Square matrix with nonnegative, finite entries."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError(f"expected a nonempty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        if np.any(arr < 0):
            raise ValueError("matrix entries must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, NonnegMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"NonnegMatrix({self.entries.tolist()!r})"


def as_nonneg(M) -> NonnegMatrix:
    return M if isinstance(M, NonnegMatrix) else NonnegMatrix(M)


class Verdict(str, enum.Enum):
    CONVERGENT = "Convergent"
    NOT_CONVERGENT = "NotConvergent"
    BOUNDARY = "Boundary"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ConvergenceReport:
    spectral_radius: float
    by_power_iteration: bool
    by_neumann: bool
    by_eigenvalues: bool
    by_inverse_positivity: bool
    verdict: Verdict

    @property
    def criteria(self) -> dict[str, bool]:
        return {
            "power_iteration": self.by_power_iteration,
            "neumann": self.by_neumann,
            "eigenvalues": self.by_eigenvalues,
            "inverse_positivity": self.by_inverse_positivity,
        }


# -----------------------------------------------------------------------------
# spectral radius
# -----------------------------------------------------------------------------

def spectral_radius(M) -> float:
    """Largest eigenvalue modulus of a nonnegative matrix.

    1x1 and 2x2 matrices use the closed form.  For a nonnegative 2x2 matrix
    ``[[p, q], [r, s]]`` the discriminant ``((p - s)/2)**2 + q*r`` is
    nonnegative, so both eigenvalues are real and the Perron root is
    ``(p + s)/2 + sqrt(disc)``.

    Larger matrices use power iteration on ``M + I`` (the shift removes
    peripheral eigenvalues other than the Perron root) and stop once the
    Collatz-Wielandt bracket ``min (Bv)_i/v_i <= rho(B) <= max (Bv)_i/v_i``
    is tight.  Reducible or defective matrices that do not tighten within the
    step cap fall back to a dense QR eigensolver.
    """
    A = as_nonneg(M).entries
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0])
    if n == 2:
        p, q, r, s = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
        half_diff = 0.5 * (p - s)
        return float(0.5 * (p + s) + math.sqrt(half_diff * half_diff + q * r))
    rho = _perron_power_iteration(A)
    if rho is None:
        rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    return rho


def _perron_power_iteration(A):
    n = A.shape[0]
    B = A + np.eye(n)
    rng = np.random.default_rng(20240601)
    v = rng.uniform(0.5, 1.5, size=n)
    v /= v.sum()
    for _ in range(_POWER_ITER_CAP):
        w = B @ v
        if np.any(v <= 1e-280):
            return None
        ratios = w / v
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= 1e-14 * hi:
            return float(max(0.5 * (lo + hi) - 1.0, 0.0))
        v = w / w.sum()
    return None


# -----------------------------------------------------------------------------
# Neumann series
# -----------------------------------------------------------------------------

def _neumann_partial_sums(A, tol):
    """Doubling evaluation of ``I + M + ... + M^(K-1)`` with ``K = 2^j``.

    Returns ``(S, tail_bound)``; ``tail_bound`` is a rigorous bound on the
    max-entry of the omitted tail, or ``inf`` if the sums did not settle.
    Uses ``tail = M^K (I - M)^-1 = M^K (S + tail)`` so that with
    ``q = ||M^K||_inf < 1`` the tail is at most ``q ||S||_inf / (1 - q)``.
    """
    n = A.shape[0]
    S = np.eye(n)
    P = A.copy()
    for _ in range(_MAX_SQUARINGS):
        q = np.abs(P).sum(axis=1).max()
        if q < 1.0:
            bound = q * np.abs(S).sum(axis=1).max() / (1.0 - q)
            if bound < tol:
                return S, bound
        S = S + P @ S
        P = P @ P
        if not (np.all(np.isfinite(S)) and np.all(np.isfinite(P))) or S.max() > _POWER_HUGE:
            return S, math.inf
    return S, math.inf


def neumann_inverse(M, tol: float = 1e-12) -> np.ndarray:
    """``(I - M)^-1`` as a truncated Neumann series, accurate to ``tol`` entrywise.

    Partial sums of a nonnegative series approach the inverse from below, so
    the result is entrywise nonnegative and never exceeds the true inverse
    by more than roundoff.
    """
    A = as_nonneg(M).entries
    rho = spectral_radius(A)
    if rho >= 1.0:
        raise NotConvergent(f"spectral radius {rho!r} >= 1; Neumann series diverges")
    S, bound = _neumann_partial_sums(A, tol)
    if not bound < tol:
        raise NotConvergent(f"Neumann series did not reach tolerance {tol!r} (rho={rho!r})")
    return S


# -----------------------------------------------------------------------------
# the four criteria
# -----------------------------------------------------------------------------

def _powers_vanish(A) -> bool:
    # Repeated squaring visits M^(2^j); the cap reaches exponents ~1.8e19.
    P = A.copy()
    for _ in range(_MAX_SQUARINGS):
        peak = P.max()
        if peak < _POWER_TINY:
            return True
        if not np.isfinite(peak) or peak > _POWER_HUGE:
            return False
        P = P @ P
    return False


def _direct_inverse(A):
    n = A.shape[0]
    I_minus = np.eye(n) - A
    if np.linalg.cond(I_minus) > 1e15:
        return None
    try:
        return np.linalg.solve(I_minus, np.eye(n))
    except np.linalg.LinAlgError:
        return None


def _neumann_settled_sum(A):
    # Doubling partial sums until the increment is below roundoff of the sum.
    n = A.shape[0]
    S = np.eye(n)
    P = A.copy()
    for _ in range(_MAX_SQUARINGS):
        increment = P @ S
        S_next = S + increment
        if not np.all(np.isfinite(S_next)) or S_next.max() > _POWER_HUGE:
            return None
        if np.abs(increment).max() <= 1e-15 * np.abs(S_next).max():
            return S_next
        S = S_next
        P = P @ P
    return None


def _neumann_matches_inverse(A) -> bool:
    S = _neumann_settled_sum(A)
    if S is None:
        return False
    D = _direct_inverse(A)
    if D is None:
        return False
    scale = max(1.0, np.abs(D).max())
    return bool(np.abs(S - D).max() <= 1e-6 * scale)


def _inverse_is_nonnegative(A) -> bool:
    D = _direct_inverse(A)
    if D is None:
        return False
    scale = max(1.0, np.abs(D).max())
    return bool(D.min() >= -1e-12 * scale)


def check_convergent_to_zero(M, boundary_band: float = DEFAULT_BOUNDARY_BAND) -> ConvergenceReport:
    """Evaluate the four equivalent convergence criteria on ``M``.

    Raises :class:`DisagreementOutsideBoundary` if the criteria disagree
    while the spectral radius lies outside ``[1 - band, 1 + band]``.
    """
    if not 0 < boundary_band <= 0.1:
        raise ValueError("boundary_band must lie in (0, 0.1]")
    A = as_nonneg(M).entries
    rho = spectral_radius(A)
    report = ConvergenceReport(
        spectral_radius=rho,
        by_power_iteration=_powers_vanish(A),
        by_neumann=_neumann_matches_inverse(A),
        by_eigenvalues=rho < 1.0,
        by_inverse_positivity=_inverse_is_nonnegative(A),
        verdict=_verdict(rho, boundary_band),
    )
    if report.verdict is not Verdict.BOUNDARY:
        expected = report.verdict is Verdict.CONVERGENT
        wrong = [k for k, v in report.criteria.items() if v != expected]
        if wrong:
            raise DisagreementOutsideBoundary(
                f"rho={rho!r} gives {report.verdict} but criteria {wrong} disagree for {A.tolist()}"
            )
    return report


def _verdict(rho, band):
    if rho < 1.0 - band:
        return Verdict.CONVERGENT
    if rho > 1.0 + band:
        return Verdict.NOT_CONVERGENT
    return Verdict.BOUNDARY


def is_convergent(M, boundary_band: float = DEFAULT_BOUNDARY_BAND) -> bool:
    """Cheap verdict test: ``rho(M) < 1 - boundary_band``."""
    return spectral_radius(M) < 1.0 - boundary_band


# -----------------------------------------------------------------------------
# perturbation
# -----------------------------------------------------------------------------

def perturbation_margin(A, B, tol: float = 1e-10) -> float:
    """Largest ``eps`` for which ``A + eps*B`` stays convergent to zero.

    The spectral radius of a nonnegative matrix is monotone in its entries,
    so bisection on ``eps in [0, 1e6]`` brackets the crossing of ``rho = 1``.
    The returned value is the convergent end of the final bracket.  Returns
    :data:`UNBOUNDED` when ``B`` is zero or ``A + 1e6*B`` is still convergent.
    """
    A = as_nonneg(A).entries
    B = as_nonneg(B).entries
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    if spectral_radius(A) >= 1.0:
        raise NotConvergent("A is not convergent to zero")
    if not np.any(B):
        return UNBOUNDED
    if spectral_radius(A + _MARGIN_CAP * B) < 1.0:
        return UNBOUNDED
    lo, hi = 0.0, _MARGIN_CAP
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if spectral_radius(A + mid * B) < 1.0:
            lo = mid
        else:
            hi = mid
    return lo
