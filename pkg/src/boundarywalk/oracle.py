"""Independent ground-truth references for the step solver and the attack.

Deliberately dumb and exhaustive: a lattice scan for the step problem in up to
three dimensions, the dual-norm point-to-plane formula for linear models, and
subset enumeration for minimal L0 changes. Nothing here shares code with the
solver it referees.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import (
    BALL_TOL,
    BOX_TOL,
    L0_DIFF_TOL,
    BoxBounds,
    DualState,
    NormKind,
    Solution,
    TrustRegionProblem,
    as_vector,
)

# Coefficients smaller than this cannot anchor the plane-elimination scan.
COEFF_TOL = 1e-12


class UnreachableError(RuntimeError):
    """No allowed change can produce the requested side of the plane."""


@dataclass(frozen=True)
class GridSpec:
    """Lattice used by grid_solve.

    resolution is the lattice pitch. dim_cap refuses problems too large to
    scan. ball_slack widens the squared-length check so a lattice point
    rounded off a feasible solution is not rejected; keep it 0 when the scan
    must stay inside the true feasible set.
    """

    resolution: float
    dim_cap: int = 3
    ball_slack: float = 0.0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not 1 <= self.dim_cap <= 3:
            raise ValueError(f"dim_cap must be in [1, 3], got {self.dim_cap}")
        if self.ball_slack < 0:
            raise ValueError(f"ball_slack must be >= 0, got {self.ball_slack}")


def _objectives(res_others: np.ndarray, res_i: np.ndarray, norm: NormKind, n: int) -> np.ndarray:
    if norm is NormKind.L0:
        changed = np.sum(np.abs(res_others) > L0_DIFF_TOL, axis=1)
        return (changed + (np.abs(res_i) > L0_DIFF_TOL)) / n
    if norm is NormKind.L1:
        return np.sum(np.abs(res_others), axis=1) + np.abs(res_i)
    if norm is NormKind.L2:
        return np.sqrt(np.sum(res_others * res_others, axis=1) + res_i * res_i)
    return np.maximum(np.max(np.abs(res_others), axis=1, initial=0.0), np.abs(res_i))


def grid_solve(problem: TrustRegionProblem, spec: GridSpec) -> Solution:
    """Exhaustive reference solve of the step problem on a lattice.

    One coordinate at a time is eliminated through the plane equality (so
    every candidate satisfies b . delta = c exactly, well inside the
    resolution-scaled slack a plain lattice would need); the remaining
    coordinates scan a pitch-anchored lattice augmented with the exact
    residual, zero, and box-endpoint values. Refining the resolution by an
    integer factor keeps the old lattice as a subset, so the reported optimum
    never increases under refinement. Each candidate is feasible, hence the
    result upper-bounds the true optimum (up to ball_slack).
    """
    n = problem.n
    if n > spec.dim_cap:
        raise ValueError(f"problem has {n} dimensions, oracle cap is {spec.dim_cap}")
    h = spec.resolution
    b, d, c = problem.b, problem.d, problem.c
    lo, hi = problem.delta_lo, problem.delta_hi
    sq_cap = problem.r + BALL_TOL + spec.ball_slack
    radius = float(np.sqrt(sq_cap))

    best_obj = np.inf
    best_delta = None

    for i in range(n):
        if abs(b[i]) <= COEFF_TOL:
            continue
        others = [j for j in range(n) if j != i]
        axes = []
        for j in others:
            a_lo = max(lo[j], -radius)
            a_hi = min(hi[j], radius)
            if a_lo > a_hi:
                axes = None
                break
            k0 = int(np.ceil(a_lo / h))
            k1 = int(np.floor(a_hi / h))
            lattice = h * np.arange(k0, k1 + 1) if k1 >= k0 else np.empty(0)
            specials = np.clip(np.array([0.0, d[j], a_lo, a_hi]), a_lo, a_hi)
            axes.append(np.unique(np.concatenate([lattice, specials])))
        if axes is None:
            continue
        if others:
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=1)
        else:
            pts = np.zeros((1, 0))
        di = (c - pts @ b[others]) / b[i]
        ok = (di >= lo[i] - BOX_TOL) & (di <= hi[i] + BOX_TOL)
        ok &= di * di + np.sum(pts * pts, axis=1) <= sq_cap
        if not np.any(ok):
            continue
        pts, di = pts[ok], di[ok]
        obj = _objectives(d[others][None, :] - pts, d[i] - di, problem.norm, n)
        k = int(np.argmin(obj))
        if obj[k] < best_obj:
            best_obj = float(obj[k])
            delta = np.zeros(n)
            delta[others] = pts[k]
            delta[i] = di[k]
            best_delta = delta

    if best_delta is None:
        return Solution(np.zeros(n), np.inf, DualState(), feasible=False)
    return Solution(best_delta, best_obj, DualState(), feasible=True)


def linear_minimal_distance(w, offset: float, x, p: NormKind) -> float:
    """Distance from x to the plane {z : w . z + offset = 0} in norm p.

    Standard dual-norm formula |w . x + offset| / ||w||_q with q dual to p.
    Only meaningful when the closest plane point is box-interior; the caller
    is responsible for checking that.
    """
    w = as_vector(w)
    x = as_vector(x)
    if w.shape != x.shape:
        raise ValueError("w and x must share one length")
    if not np.any(w != 0.0):
        raise ValueError("w must be nonzero")
    if p is NormKind.L0:
        raise ValueError("no dual-norm formula for L0; use l0_minimal_linear")
    if p is NormKind.L2:
        dual = float(np.sqrt(np.sum(w * w)))
    elif p is NormKind.LINF:
        dual = float(np.sum(np.abs(w)))
    else:
        dual = float(np.max(np.abs(w)))
    return float(abs(w @ x + offset)) / dual


def l0_minimal_linear(w, offset: float, x, bounds: BoxBounds = BoxBounds()) -> int:
    """Fewest components of x to change so that w . z + offset > 0 strictly.

    Changed components move to whichever box extreme pushes the score up the
    most; subsets are enumerated in order of size, so the first success is
    minimal. Callers wanting the negative side pass (-w, -offset). Returns 0
    when x already scores positive; raises UnreachableError when even changing
    everything cannot cross.
    """
    w = as_vector(w)
    x = as_vector(x)
    if w.shape != x.shape:
        raise ValueError("w and x must share one length")
    if not np.any(w != 0.0):
        raise UnreachableError("all-zero w: the score cannot be moved")
    n = x.size
    if n > 12:
        raise ValueError(f"subset enumeration capped at 12 dimensions, got {n}")

    base = float(w @ x + offset)
    if base > 0.0:
        return 0
    gain = np.maximum(w * (bounds.upper - x), w * (bounds.lower - x))
    if base + float(np.sum(np.maximum(gain, 0.0))) <= 0.0:
        raise UnreachableError("no combination of box extremes crosses the plane")
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            if base + float(np.sum(gain[list(subset)])) > 0.0:
                return size
    raise UnreachableError("no combination of box extremes crosses the plane")
