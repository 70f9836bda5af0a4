"""Problem definition: right-hand sides, nonlocal conditions, declared constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError, UnknownIdentifier
from .expr import FunctionalExpr, ScalarExpr, parse_functional, parse_scalar
from .space import DEFAULT_N, DEFAULT_THETA, ThetaWeight


def _check_nonneg(obj):
    for f in fields(obj):
        v = getattr(obj, f.name)
        if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise ConfigError(f"{type(obj).__name__}.{f.name} must be a finite number >= 0, got {v!r}")
        object.__setattr__(obj, f.name, float(v))


@dataclass(frozen=True)
class LipschitzSpec:
    """Constants with ``|f1(t,x,y) - f1(t,x',y')| <= a1|x-x'| + b1|y-y'|`` etc.

    ``A1, B1, A2, B2`` bound the functionals in the sup norm:
    ``|alpha[x,y] - alpha[x',y']| <= A1|x-x'|_C + B1|y-y'|_C``.
    """

    a1: float = 0.0
    b1: float = 0.0
    a2: float = 0.0
    b2: float = 0.0
    A1: float = 0.0
    B1: float = 0.0
    A2: float = 0.0
    B2: float = 0.0

    def __post_init__(self):
        _check_nonneg(self)


@dataclass(frozen=True)
class GrowthSpec:
    """Constants with ``|f1(t,x,y)| <= a1|x| + b1|y| + c1`` and
    ``|alpha[x,y]| <= A1|x|_C + B1|y|_C + C1`` (likewise for f2, beta)."""

    a1: float = 0.0
    b1: float = 0.0
    c1: float = 0.0
    a2: float = 0.0
    b2: float = 0.0
    c2: float = 0.0
    A1: float = 0.0
    B1: float = 0.0
    C1: float = 0.0
    A2: float = 0.0
    B2: float = 0.0
    C2: float = 0.0

    def __post_init__(self):
        _check_nonneg(self)


CARATHEODORY_VARIABLES = ("t", "r1", "r2")
FUNCTIONAL_BOUND_VARIABLES = ("r1", "r2")


@dataclass(frozen=True)
class CaratheodoryGrowthSpec:
    """Bounds ``|f1| <= omega1(t, |x|, |y|)``, ``|alpha| <= omega3(|x|_C, |y|_C)``.

    ``omega1, omega2`` are expressions in ``t, r1, r2``; ``omega3, omega4`` in
    ``r1, r2``.  All should be nondecreasing in ``r1, r2``.
    """

    omega1: ScalarExpr
    omega2: ScalarExpr
    omega3: ScalarExpr
    omega4: ScalarExpr
    cap: tuple = (100.0, 100.0)
    params: dict = field(default_factory=dict)

    @classmethod
    def from_strings(cls, omega1, omega2, omega3, omega4, cap=(100.0, 100.0), params=None):
        names = set(params) if params is not None else None
        params = dict(params) if isinstance(params, dict) else {}
        return cls(
            parse_scalar(omega1, names, CARATHEODORY_VARIABLES),
            parse_scalar(omega2, names, CARATHEODORY_VARIABLES),
            parse_scalar(omega3, names, FUNCTIONAL_BOUND_VARIABLES),
            parse_scalar(omega4, names, FUNCTIONAL_BOUND_VARIABLES),
            tuple(float(c) for c in cap),
            params,
        )


SOLVER_MODES = ("perov", "picard")


@dataclass(frozen=True)
class ProblemSpec:
    """The nonlocal problem ``x' = f1, y' = f2, x(0) = alpha[x,y], y(0) = beta[x,y]``."""

    f1: ScalarExpr
    f2: ScalarExpr
    alpha: FunctionalExpr
    beta: FunctionalExpr
    params: dict = field(default_factory=dict)
    n_intervals: int = DEFAULT_N
    theta: ThetaWeight = field(default_factory=ThetaWeight)
    tolerance: float = 1e-8
    declared_lipschitz: LipschitzSpec | None = None
    declared_growth: GrowthSpec | None = None
    caratheodory: CaratheodoryGrowthSpec | None = None
    solver: str = "perov"
    seed: int = 0
    max_iter: int = 1000

    def __post_init__(self):
        if not isinstance(self.theta, ThetaWeight):
            object.__setattr__(self, "theta", ThetaWeight(self.theta))
        object.__setattr__(self, "params", {k: float(v) for k, v in dict(self.params).items()})
        if not isinstance(self.n_intervals, int) or self.n_intervals < 4 or self.n_intervals % 4:
            raise ConfigError(f"grid size N must be a positive multiple of 4, got {self.n_intervals!r}")
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance must be > 0, got {self.tolerance!r}")
        if self.solver not in SOLVER_MODES:
            raise ConfigError(f"solver must be one of {SOLVER_MODES}, got {self.solver!r}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        needed = set()
        exprs = [self.f1, self.f2, self.alpha, self.beta]
        if self.caratheodory is not None:
            c = self.caratheodory
            exprs += [c.omega1, c.omega2, c.omega3, c.omega4]
        for e in exprs:
            needed |= e.parameters
        missing = sorted(needed - set(self.params))
        if missing:
            raise UnknownIdentifier(f"unbound parameter(s): {', '.join(missing)}")

    @classmethod
    def from_strings(cls, f1: str, f2: str, alpha: str, beta: str, params=None, **kwargs) -> "ProblemSpec":
        params = dict(params or {})
        names = set(params)
        return cls(
            f1=parse_scalar(f1, names),
            f2=parse_scalar(f2, names),
            alpha=parse_functional(alpha, names),
            beta=parse_functional(beta, names),
            params=params,
            **kwargs,
        )

    def with_grid(self, n_intervals: int) -> "ProblemSpec":
        return replace(self, n_intervals=n_intervals)
