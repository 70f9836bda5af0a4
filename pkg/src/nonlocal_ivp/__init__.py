"""Nonlocal initial value problems for first-order 2D systems.

Solves ``x' = f1(t, x, y)``, ``y' = f2(t, x, y)`` on ``[0, 1]`` with
``x(0) = alpha[x, y]`` and ``y(0) = beta[x, y]`` by fixed-point iteration,
checks the matrix hypotheses that make the iteration converge, and
cross-checks everything against an independent shooting solver.
"""

from .config import builtin_config, load_config, problem_from_config
from .errors import NonlocalIVPError
from .expr import parse_functional, parse_scalar
from .hypotheses import (
    apriori_bound,
    ball_invariance_check,
    build_M_theta,
    falsify_constants,
    find_theta,
    schauder_radii,
)
from .matrix import NonnegMatrix, Verdict, check_convergent_to_zero, neumann_inverse, spectral_radius
from .operator import apply_T, residual
from .oracle import solve_nonlocal
from .problem import CaratheodoryGrowthSpec, GrowthSpec, LipschitzSpec, ProblemSpec
from .solver import certificate_check, perov_solve, picard_solve
from .space import GridFunction, SystemState, ThetaWeight, vector_distance

__version__ = "0.1.0"
