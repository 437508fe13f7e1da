"""Shared numeric types: norms, box projections, and the per-step problem container.

Vectors are flat float64 numpy arrays throughout. All tolerances used by the
rest of the library live here as module constants.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# Components closer than this are treated as equal when counting L0 differences.
L0_DIFF_TOL = 1e-9
# Absolute slack allowed on the squared step length of a feasible solution.
BALL_TOL = 1e-9
# Componentwise slack allowed on box bounds of a feasible solution.
BOX_TOL = 1e-12
# Relative slack on the boundary equality; beyond this a solution is flagged infeasible.
EQUALITY_REL_TOL = 1e-3


class DimensionMismatchError(ValueError):
    """Operands have incompatible lengths."""


class InvalidBoundsError(ValueError):
    """Lower bound exceeds upper bound somewhere."""


class NormKind(enum.Enum):
    L0 = "l0"
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"


def as_vector(values) -> np.ndarray:
    """Coerce to a 1-D float64 array and check every entry is finite."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"expected a flat vector of length >= 1, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite entries")
    return v


@dataclass(frozen=True)
class BoxBounds:
    """Valid interval for input values, identical for every component."""

    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if not self.lower < self.upper:
            raise InvalidBoundsError(f"need lower < upper, got [{self.lower}, {self.upper}]")

    @property
    def diameter(self) -> float:
        return self.upper - self.lower


def lp_distance(a, b, p: NormKind) -> float:
    """Distance between two vectors under the given norm.

    L0 is reported as the fraction of components that differ by more than
    ``L0_DIFF_TOL`` (so a value of 1.0 means every component changed).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"length mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    if p is NormKind.L0:
        return float(np.count_nonzero(np.abs(diff) > L0_DIFF_TOL)) / a.size
    if p is NormKind.L1:
        return float(np.sum(np.abs(diff)))
    if p is NormKind.L2:
        return float(np.sqrt(np.sum(diff * diff)))
    return float(np.max(np.abs(diff)))


def project_box(v, lo, hi) -> np.ndarray:
    """Componentwise clamp of v into [lo, hi]."""
    v = np.asarray(v, dtype=np.float64)
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), v.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), v.shape)
    if np.any(lo > hi):
        raise InvalidBoundsError("lower bound exceeds upper bound in some component")
    return np.clip(v, lo, hi)


@dataclass
class TrustRegionProblem:
    """One boundary-step subproblem.

    Find the step ``delta`` minimizing ``||x - x_tilde - delta||_p`` subject to
    ``b . delta = c``, ``||delta||_2^2 <= r`` and ``bounds.lower <= x_tilde +
    delta <= bounds.upper``.
    """

    x: np.ndarray
    x_tilde: np.ndarray
    b: np.ndarray
    c: float
    r: float
    bounds: BoxBounds = field(default_factory=BoxBounds)
    norm: NormKind = NormKind.L2

    def __post_init__(self):
        self.x = as_vector(self.x)
        self.x_tilde = as_vector(self.x_tilde)
        self.b = as_vector(self.b)
        if not (self.x.shape == self.x_tilde.shape == self.b.shape):
            raise DimensionMismatchError("x, x_tilde and b must share one length")
        if not self.r > 0:
            raise ValueError(f"trust radius must be positive, got {self.r}")
        lo, hi = self.bounds.lower, self.bounds.upper
        for name, v in (("x", self.x), ("x_tilde", self.x_tilde)):
            if np.any(v < lo - BOX_TOL) or np.any(v > hi + BOX_TOL):
                raise ValueError(f"{name} violates box bounds [{lo}, {hi}]")
        if not np.any(self.b != 0.0):
            raise ValueError("boundary normal b is the zero vector")

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def d(self) -> np.ndarray:
        """Residual x - x_tilde the step is trying to close."""
        return self.x - self.x_tilde

    @property
    def delta_lo(self) -> np.ndarray:
        """Per-component lower bounds on delta implied by the box."""
        return self.bounds.lower - self.x_tilde

    @property
    def delta_hi(self) -> np.ndarray:
        """Per-component upper bounds on delta implied by the box."""
        return self.bounds.upper - self.x_tilde


@dataclass
class DualState:
    """Dual variables of the step problem: boundary multiplier, trust-region
    multiplier, and (Linf only) the residual-magnitude slack."""

    lam: float = 0.0
    mu: float = 0.0
    epsilon: float | None = None

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass
class Solution:
    """Solver output: the step, its objective in plain norm units, the duals
    reached, whether all constraints hold within tolerance, and the number of
    dual iterations spent."""

    delta: np.ndarray
    objective: float
    dual: DualState
    feasible: bool
    iterations: int = 0


def equality_tolerance(c: float) -> float:
    """Allowed |b . delta - c| for a solution to count as on-boundary."""
    return EQUALITY_REL_TOL * max(1.0, abs(c))
