"""The augmented space (C[0,1] x R)^2 on a uniform grid.

A function in C[0,1] is stored by its samples at ``t_i = i/N``; the sup norm
is the maximum over nodes.  A pair ``(x, a)`` carries the weighted norm
``|x|_C + theta*|a|`` and a system state ``u = ((x, a), (y, b))`` is measured
by the vector of the two component norms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatch

DEFAULT_N = 1024
DEFAULT_THETA = 2.0


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a real function at the ``N + 1`` nodes ``i/N`` of [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size < 5:
            raise ValueError(f"need at least 4 intervals, got {vals.size - 1}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, fn, n_intervals: int = DEFAULT_N) -> "GridFunction":
        t = nodes(n_intervals)
        return cls(np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape))

    @classmethod
    def constant(cls, value: float, n_intervals: int = DEFAULT_N) -> "GridFunction":
        return cls(np.full(n_intervals + 1, float(value)))

    @property
    def n_intervals(self) -> int:
        return self.values.size - 1

    @property
    def h(self) -> float:
        return 1.0 / self.n_intervals

    @cached_property
    def t(self) -> np.ndarray:
        return nodes(self.n_intervals)

    def __call__(self, c: float) -> float:
        """Linear interpolation between neighbouring nodes."""
        return float(np.interp(c, self.t, self.values))

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"GridFunction(N={self.n_intervals}, sup={sup_norm(self):.6g})"

    def to_csv(self, path, column: str = "value"):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", column])
            for ti, vi in zip(self.t, self.values):
                writer.writerow([_fmt(ti), _fmt(vi)])


def nodes(n_intervals: int) -> np.ndarray:
    return np.arange(n_intervals + 1, dtype=float) / n_intervals


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass(frozen=True)
class AugmentedState:
    """A pair ``(x, a)`` in C[0,1] x R."""

    func: GridFunction
    scalar: float

    def __post_init__(self):
        s = float(self.scalar)
        if not math.isfinite(s):
            raise ValueError("scalar part must be finite")
        object.__setattr__(self, "scalar", s)


@dataclass(frozen=True)
class SystemState:
    """``u = ((x, a), (y, b))``; both components share one grid."""

    first: AugmentedState
    second: AugmentedState

    def __post_init__(self):
        if self.first.func.n_intervals != self.second.func.n_intervals:
            raise GridMismatch(
                f"components on different grids: N={self.first.func.n_intervals} "
                f"and N={self.second.func.n_intervals}"
            )

    @classmethod
    def zero(cls, n_intervals: int = DEFAULT_N) -> "SystemState":
        z = GridFunction.constant(0.0, n_intervals)
        return cls(AugmentedState(z, 0.0), AugmentedState(z, 0.0))

    @classmethod
    def from_arrays(cls, x, a, y, b) -> "SystemState":
        return cls(AugmentedState(GridFunction(x), a), AugmentedState(GridFunction(y), b))

    @property
    def n_intervals(self) -> int:
        return self.first.func.n_intervals

    @property
    def x(self) -> GridFunction:
        return self.first.func

    @property
    def y(self) -> GridFunction:
        return self.second.func

    @property
    def a(self) -> float:
        return self.first.scalar

    @property
    def b(self) -> float:
        return self.second.scalar

    def scaled(self, s: float) -> "SystemState":
        return SystemState.from_arrays(s * self.x.values, s * self.a, s * self.y.values, s * self.b)


@dataclass(frozen=True)
class ThetaWeight:
    theta: float = DEFAULT_THETA

    def __post_init__(self):
        th = float(self.theta)
        if not (th > 0 and math.isfinite(th)):
            raise ValueError(f"theta must be a positive finite number, got {self.theta!r}")
        object.__setattr__(self, "theta", th)


def _theta(w) -> float:
    return w.theta if isinstance(w, ThetaWeight) else ThetaWeight(w).theta


def sup_norm(x: GridFunction) -> float:
    return float(np.max(np.abs(x.values)))


def weighted_norm(xa: AugmentedState, w) -> float:
    return sup_norm(xa.func) + _theta(w) * abs(xa.scalar)


def state_norms(u: SystemState, w) -> np.ndarray:
    """The vector-valued norm ``[|x_a|, |y_b|]``."""
    return np.array([weighted_norm(u.first, w), weighted_norm(u.second, w)])


def vector_distance(u: SystemState, v: SystemState, w) -> np.ndarray:
    """Componentwise weighted distance; a vector-valued metric on SystemState."""
    if u.n_intervals != v.n_intervals:
        raise GridMismatch(f"states on different grids: N={u.n_intervals} and N={v.n_intervals}")
    theta = _theta(w)
    return np.array([
        float(np.max(np.abs(u.x.values - v.x.values))) + theta * abs(u.a - v.a),
        float(np.max(np.abs(u.y.values - v.y.values))) + theta * abs(u.b - v.b),
    ])


def write_solution_csv(path, state: SystemState):
    """CSV with header ``t,x,y`` and one row per grid node."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "x", "y"])
        for ti, xi, yi in zip(state.x.t, state.x.values, state.y.values):
            writer.writerow([_fmt(ti), _fmt(xi), _fmt(yi)])


def read_solution_csv(path):
    """Inverse of :func:`write_solution_csv`; returns ``(t, x, y)`` arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1], data[:, 2]
