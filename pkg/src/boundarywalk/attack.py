"""Boundary-walking attack and the PGD baselines.

The walk starts from any adversarial point, binary-searches to the decision
boundary along the segment to the clean input, then repeatedly solves the
trust-region step problem against the local boundary plane and takes the
step. One combined value-and-gradient evaluation of the criterion counts as
one model query; the starting-point scan is accounted separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BoxBounds, NormKind, TrustRegionProblem, as_vector, lp_distance, project_box
from .criterion import Criterion, adv_value, adv_value_and_grad, is_adversarial
from .models import Dataset, Model, forward, grad_scalar
from .trust_region import SolverSettings, solve

UNIFORM_START_DRAWS = 1000
BOUNDARY_OVERSHOOT = 1e-6

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class StartFailureError(RuntimeError):
    """No adversarial starting point in the pool or among uniform draws."""


@dataclass(frozen=True)
class AttackConfig:
    """Walk parameters; trust_radius (the squared step-length bound) is the
    attack's single real hyperparameter."""

    norm: NormKind
    trust_radius: float
    max_steps: int = 1000
    radius_decay: float = 0.98
    binary_search_steps: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.trust_radius > 0:
            raise ValueError("trust_radius must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0.0 < self.radius_decay <= 1.0:
            raise ValueError("radius_decay must be in (0, 1]")
        if self.binary_search_steps < 0:
            raise ValueError("binary_search_steps must be >= 0")


@dataclass
class AttackState:
    """Mutable progress of one walk."""

    k: int
    x_tilde: np.ndarray
    best: np.ndarray | None
    best_distance: float
    queries: int
    trace: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class AttackResult:
    success: bool
    adversarial: np.ndarray | None
    distance: float
    queries_used: int
    trace: list[tuple[int, float]]
    start_queries: int = 0


def _find_start(
    pool: Dataset | None,
    x: np.ndarray,
    crit: Criterion,
    model: Model,
    rng: np.random.Generator,
    bounds: BoxBounds,
) -> tuple[np.ndarray, int]:
    queries = 0
    best, best_dist = None, np.inf
    if pool is not None:
        for sample in pool.samples:
            queries += 1
            if is_adversarial(forward(model, sample), crit):
                dist = lp_distance(x, sample, NormKind.L2)
                if dist < best_dist:
                    best, best_dist = np.asarray(sample, dtype=np.float64), dist
    if best is not None:
        return best.copy(), queries
    for _ in range(UNIFORM_START_DRAWS):
        draw = rng.uniform(bounds.lower, bounds.upper, x.size)
        queries += 1
        if is_adversarial(forward(model, draw), crit):
            return draw, queries
    raise StartFailureError(
        f"no adversarial start in pool or {UNIFORM_START_DRAWS} uniform draws"
    )


def find_starting_point(
    pool: Dataset | None,
    x,
    crit: Criterion,
    model: Model,
    rng: np.random.Generator | None = None,
    bounds: BoxBounds = BoxBounds(),
) -> np.ndarray:
    """Closest adversarial pool sample in L2, else a uniform box draw."""
    rng = rng if rng is not None else np.random.default_rng(0)
    point, _ = _find_start(pool, as_vector(x), crit, model, rng, bounds)
    return point


def binary_search_to_boundary(
    model: Model, crit: Criterion, x, x_start, steps: int = 10
) -> np.ndarray:
    """Bisect the segment from the clean input to an adversarial point.

    Returns the adversarial endpoint of the final interval, so the result is
    always strictly adversarial (at worst the given start).
    """
    point, _ = _binary_search(model, crit, as_vector(x), as_vector(x_start), steps)
    return point


def _binary_search(
    model: Model, crit: Criterion, x: np.ndarray, x_start: np.ndarray, steps: int
) -> tuple[np.ndarray, int]:
    if is_adversarial(forward(model, x), crit):
        raise ValueError("clean input is already adversarial")
    if not is_adversarial(forward(model, x_start), crit):
        raise ValueError("starting point is not adversarial")
    lo, hi = x, x_start
    queries = 2
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        queries += 1
        if is_adversarial(forward(model, mid), crit):
            hi = mid
        else:
            lo = mid
    return hi.copy(), queries


def run_attack(
    model: Model,
    x,
    crit: Criterion,
    config: AttackConfig,
    pool: Dataset | None = None,
    bounds: BoxBounds = BoxBounds(),
    settings: SolverSettings | None = None,
) -> AttackResult:
    """Walk the decision boundary toward the clean input.

    Each step spends one query on the criterion value c and normal b at the
    current iterate, then steps by the solution of the trust-region problem
    targeting the plane b.delta = -c (the linearized boundary). Only strictly
    adversarial iterates that come closer in the attack norm update the best;
    any step that fails to improve shrinks the trust radius geometrically.
    """
    x = as_vector(x)
    settings = settings or SolverSettings()
    rng = np.random.default_rng(config.seed)

    start, start_queries = _find_start(pool, x, crit, model, rng, bounds)
    x0, queries = _binary_search(model, crit, x, start, config.binary_search_steps)

    state = AttackState(k=0, x_tilde=x0, best=None, best_distance=np.inf, queries=queries)
    radius = config.trust_radius
    for k in range(config.max_steps):
        state.k = k
        c_val, b = adv_value_and_grad(model, state.x_tilde, crit)
        state.queries += 1
        dist = lp_distance(x, state.x_tilde, config.norm)
        if c_val < 0.0 and dist < state.best_distance:
            state.best = state.x_tilde.copy()
            state.best_distance = dist
            state.trace.append((state.queries, dist))
        elif k > 0:
            radius *= config.radius_decay
        # aim a hair past the linearized boundary: landing at c exactly zero
        # is non-adversarial by convention and would freeze the walk
        target = -c_val - BOUNDARY_OVERSHOOT * float(np.linalg.norm(b)) * np.sqrt(radius)
        problem = TrustRegionProblem(
            x=x, x_tilde=state.x_tilde, b=b, c=target, r=radius, bounds=bounds, norm=config.norm
        )
        step = solve(problem, settings)
        state.x_tilde = project_box(state.x_tilde + step.delta, bounds.lower, bounds.upper)

    success = state.best is not None
    return AttackResult(
        success=success,
        adversarial=state.best,
        distance=state.best_distance,
        queries_used=state.queries,
        trace=state.trace,
        start_queries=start_queries,
    )


def _ce_coeffs(logits: np.ndarray, label: int) -> np.ndarray:
    shifted = logits - logits.max()
    p = np.exp(shifted)
    p /= p.sum()
    p[label] -= 1.0
    return p


def _pgd_template(model, x, crit, epsilon, stepsize, iterations, seed, bounds, adam: bool):
    x = as_vector(x)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    rng = np.random.default_rng(seed)
    ball_lo = np.maximum(x - epsilon, bounds.lower)
    ball_hi = np.minimum(x + epsilon, bounds.upper)

    # untargeted: ascend the cross-entropy of the original class;
    # targeted: descend the cross-entropy of the target class
    if crit.target_label is None:
        loss_label, sign = crit.original_label, 1.0
    else:
        loss_label, sign = crit.target_label, -1.0

    z = np.clip(x + rng.uniform(-epsilon, epsilon, x.size), ball_lo, ball_hi)
    best, best_dist = None, np.inf
    trace: list[tuple[int, float]] = []
    queries = 0

    def observe(point):
        nonlocal best, best_dist
        logits = forward(model, point)
        if is_adversarial(logits, crit):
            dist = lp_distance(x, point, NormKind.LINF)
            if dist < best_dist:
                best, best_dist = point.copy(), dist
                trace.append((queries, dist))

    queries += 1
    observe(z)

    m = np.zeros(x.size)
    v = np.zeros(x.size)
    for it in range(iterations):
        logits = forward(model, z)
        coeffs = _ce_coeffs(logits, loss_label)
        _, grad = grad_scalar(model, z, coeffs)
        queries += 1
        if adam:
            m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grad
            v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grad * grad
            m_hat = m / (1.0 - ADAM_BETA1 ** (it + 1))
            v_hat = v / (1.0 - ADAM_BETA2 ** (it + 1))
            z = z + sign * stepsize * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        else:
            z = z + sign * stepsize * np.sign(grad)
        z = np.clip(z, ball_lo, ball_hi)
        observe(z)

    return AttackResult(
        success=best is not None,
        adversarial=best,
        distance=best_dist,
        queries_used=queries,
        trace=trace,
    )


def run_pgd(
    model: Model,
    x,
    crit: Criterion,
    epsilon: float,
    stepsize: float,
    iterations: int,
    seed: int = 0,
    bounds: BoxBounds = BoxBounds(),
) -> AttackResult:
    """Signed-gradient ascent on cross-entropy inside the epsilon ball, with a
    random start and projection to ball and box after every step."""
    return _pgd_template(model, x, crit, epsilon, stepsize, iterations, seed, bounds, adam=False)


def run_adam_pgd(
    model: Model,
    x,
    crit: Criterion,
    epsilon: float,
    stepsize: float,
    iterations: int,
    seed: int = 0,
    bounds: BoxBounds = BoxBounds(),
) -> AttackResult:
    """PGD with adaptive-moment update steps in place of the sign step."""
    return _pgd_template(model, x, crit, epsilon, stepsize, iterations, seed, bounds, adam=True)
