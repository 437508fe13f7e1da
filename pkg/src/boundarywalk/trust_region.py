"""Dual solver for the per-step problem: minimize the p-norm of the remaining
perturbation subject to the boundary plane, a squared-length trust region, and
box bounds.

The plane and ball constraints are dualized; the box stays inside the inner
minimization, which separates per component and has closed or semi-closed
forms for every norm (the L-inf case adds a 1-D search over the epigraph
variable). The 2-D concave dual is maximized by a projected quasi-Newton
ascent for the convex norms and by Nelder-Mead for L0, then the primal step is
recovered from the inner minimizer and repaired onto the constraint set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    BALL_TOL,
    BOX_TOL,
    L0_DIFF_TOL,
    DualState,
    NormKind,
    Solution,
    TrustRegionProblem,
    equality_tolerance,
    lp_distance,
)

# Nelder-Mead internals (the L0 dual is cheap but non-smooth).
NM_MAX_ITER = 200
NM_ALPHA = 1.0
NM_GAMMA = 2.0
NM_BETA = 0.5
NM_SIGMA = 0.5

# Armijo slope fraction for the dual line search.
LS_SLOPE = 1e-4
LS_MAX_HALVINGS = 30


@dataclass
class InnerResult:
    """Minimizer of the box-constrained inner Lagrangian at fixed duals.

    lagrangian_value holds only the delta-dependent part (norm term plus
    lambda b.delta plus mu ||delta||^2); the constant -lambda c - mu r is
    added by the dual evaluation.
    """

    delta: np.ndarray
    lagrangian_value: float


@dataclass(frozen=True)
class SolverSettings:
    dual_max_iter: int = 100
    dual_grad_tol: float = 1e-9
    eps_search_rel_tol: float = 1e-6

    def __post_init__(self):
        if self.dual_max_iter < 1:
            raise ValueError("dual_max_iter must be >= 1")
        if not self.dual_grad_tol > 0 or not self.eps_search_rel_tol > 0:
            raise ValueError("tolerances must be positive")


def _require(problem: TrustRegionProblem, norm: NormKind, mu: float):
    if problem.norm is not norm:
        raise ValueError(f"problem norm is {problem.norm}, expected {norm}")
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")


def inner_infimum_l2(lam: float, mu: float, problem: TrustRegionProblem) -> InnerResult:
    """Exact componentwise minimizer of (d_j - delta)^2 + lam b_j delta + mu delta^2."""
    _require(problem, NormKind.L2, mu)
    d, b = problem.d, problem.b
    delta = np.clip((2.0 * d - lam * b) / (2.0 * (1.0 + mu)), problem.delta_lo, problem.delta_hi)
    res = d - delta
    value = float(np.sum(res * res + lam * b * delta + mu * delta * delta))
    return InnerResult(delta, value)


def inner_infimum_l1(lam: float, mu: float, problem: TrustRegionProblem) -> InnerResult:
    """Exact componentwise minimizer of |d_j - delta| + lam b_j delta + mu delta^2.

    The objective is piecewise convex with one kink, so the minimum over the
    box is attained at a branch stationary point, the kink, or a box endpoint.
    """
    _require(problem, NormKind.L1, mu)
    d, lb = problem.d, lam * problem.b
    lo, hi = problem.delta_lo, problem.delta_hi
    cands = [np.clip(d, lo, hi), lo, hi]
    if mu > 0:
        cands.append(np.clip((1.0 - lb) / (2.0 * mu), lo, hi))
        cands.append(np.clip(-(1.0 + lb) / (2.0 * mu), lo, hi))
    grid = np.stack(cands)
    vals = np.abs(d - grid) + lb * grid + mu * grid * grid
    pick = np.argmin(vals, axis=0)
    cols = np.arange(d.size)
    delta = grid[pick, cols]
    return InnerResult(delta, float(np.sum(vals[pick, cols])))


def inner_infimum_l0(lam: float, mu: float, problem: TrustRegionProblem) -> InnerResult:
    """Componentwise choice between leaving the component restored (delta_j =
    d_j, count 0) and paying 1 to place it at the quadratic minimum."""
    _require(problem, NormKind.L0, mu)
    d, lb = problem.d, lam * problem.b
    lo, hi = problem.delta_lo, problem.delta_hi
    keep_cost = lb * d + mu * d * d
    if mu > 0:
        moved = np.clip(-lb / (2.0 * mu), lo, hi)
    else:
        moved = np.where(lb > 0, lo, np.where(lb < 0, hi, 0.0))
    moved_cost = 1.0 + lb * moved + mu * moved * moved
    delta = np.where(keep_cost <= moved_cost, d, moved)
    return InnerResult(delta, float(np.sum(np.minimum(keep_cost, moved_cost))))


def inner_infimum_linf(lam: float, mu: float, epsilon: float, problem: TrustRegionProblem) -> InnerResult:
    """Minimizer of epsilon + lam b.delta + mu ||delta||^2 over the box merged
    with the epsilon-tube |d_j - delta_j| <= epsilon (nonempty because d lies
    inside the box)."""
    _require(problem, NormKind.LINF, mu)
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    d, lb = problem.d, lam * problem.b
    m_lo = np.maximum(problem.delta_lo, d - epsilon)
    m_hi = np.minimum(problem.delta_hi, d + epsilon)
    if mu > 0:
        delta = np.minimum(np.maximum(-lb / (2.0 * mu), m_lo), m_hi)
    else:
        zero = np.minimum(np.maximum(0.0, m_lo), m_hi)
        delta = np.where(lb > 0, m_lo, np.where(lb < 0, m_hi, zero))
    value = epsilon + float((lb * delta + mu * delta * delta).sum())
    return InnerResult(delta, value)


def epsilon_search_linf(
    lam: float, mu: float, problem: TrustRegionProblem, tolerance: float
) -> tuple[float, InnerResult]:
    """Golden-section search for the epigraph radius minimizing the inner value.

    The inner value is convex in epsilon (it is the partial minimization of a
    jointly convex function over a jointly convex set), so a bracketed search
    on [0, max|d| + box diameter] is exact up to the tolerance.
    """
    upper = float(np.max(np.abs(problem.d))) + problem.bounds.diameter
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0

    def value(eps: float) -> float:
        return inner_infimum_linf(lam, mu, eps, problem).lagrangian_value

    a, b = 0.0, upper
    c1 = b - inv_phi * (b - a)
    c2 = a + inv_phi * (b - a)
    f1, f2 = value(c1), value(c2)
    width_target = tolerance * max(1.0, upper)
    while b - a > width_target:
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - inv_phi * (b - a)
            f1 = value(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + inv_phi * (b - a)
            f2 = value(c2)
    eps = 0.5 * (a + b)
    if a == 0.0 and value(0.0) <= value(eps):
        eps = 0.0
    return eps, inner_infimum_linf(lam, mu, eps, problem)


def epsilon_exact_linf(lam: float, mu: float, problem: TrustRegionProblem) -> tuple[float, InnerResult]:
    """Exact minimizer over epsilon of the merged-bounds inner value.

    The inner value is convex piecewise-quadratic in epsilon: each component
    pulls with derivative 2 mu (epsilon - a_j) until its minimizer enters the
    tube or the tube swallows the box (at t_j), and contributes nothing after.
    Walking the sorted breakpoints with suffix sums locates the derivative's
    sign change without any bracketing iterations.
    """
    _require(problem, NormKind.LINF, mu)
    d = problem.d
    lo, hi = problem.delta_lo, problem.delta_hi
    if mu > 0.0:
        m = -lam * problem.b / (2.0 * mu)
        a = np.abs(d - m)
        cap = np.where(m > d, hi - d, d - lo)
        t = np.minimum(a, cap)
        keep = t > 0.0
        a, t = a[keep], t[keep]
        order = np.argsort(t)
        a, t = a[order], t[order]
        k = a.size
        start = np.concatenate(([0.0], t))
        end = np.concatenate((t, [np.inf]))
        remaining = np.arange(k, -1, -1, dtype=np.float64)
        suffix_a = np.concatenate((np.cumsum(a[::-1])[::-1], [0.0]))
        deriv_at_start = 1.0 + 2.0 * mu * (remaining * start - suffix_a)
        with np.errstate(divide="ignore", invalid="ignore"):
            crossing = (2.0 * mu * suffix_a - 1.0) / (2.0 * mu * remaining)
        crossing = np.where(remaining > 0.0, crossing, np.inf)
        at_start = deriv_at_start >= 0.0
        hits = at_start | (crossing < end)
        j = int(np.argmax(hits))
        eps = float(start[j]) if at_start[j] else float(crossing[j])
    else:
        w = np.abs(lam * problem.b)
        cap = np.where(lam * problem.b > 0.0, d - lo, hi - d)
        keep = (w > 0.0) & (cap > 0.0)
        w, cap = w[keep], cap[keep]
        order = np.argsort(cap)
        w, cap = w[order], cap[order]
        start = np.concatenate(([0.0], cap))
        suffix_w = np.concatenate((np.cumsum(w[::-1])[::-1], [0.0]))
        j = int(np.argmax(1.0 - suffix_w >= 0.0))
        eps = float(start[j])
    return eps, inner_infimum_linf(lam, mu, eps, problem)


def _inner_at(
    lam: float, mu: float, problem: TrustRegionProblem, settings: SolverSettings,
    epsilon: float | None,
) -> tuple[InnerResult, float | None]:
    if problem.norm is NormKind.LINF:
        if epsilon is None:
            epsilon, inner = epsilon_exact_linf(lam, mu, problem)
            return inner, epsilon
        return inner_infimum_linf(lam, mu, epsilon, problem), epsilon
    if problem.norm is NormKind.L2:
        return inner_infimum_l2(lam, mu, problem), None
    if problem.norm is NormKind.L1:
        return inner_infimum_l1(lam, mu, problem), None
    return inner_infimum_l0(lam, mu, problem), None


def dual_value_and_grad(
    lam: float,
    mu: float,
    problem: TrustRegionProblem,
    epsilon: float | None = None,
    settings: SolverSettings | None = None,
) -> tuple[float, float, float]:
    """Dual value g(lam, mu) and its envelope gradient.

    g adds the -lam c - mu r constants to the inner value; the gradient is the
    constraint residual of the inner minimizer: (b.delta - c, ||delta||^2 - r).
    For L-inf, epsilon is minimized internally unless pinned by the caller.
    """
    settings = settings or SolverSettings()
    inner, _ = _inner_at(lam, mu, problem, settings, epsilon)
    g = inner.lagrangian_value - lam * problem.c - mu * problem.r
    delta = inner.delta
    return g, float(problem.b @ delta - problem.c), float(delta @ delta - problem.r)


def _projected_bfgs(problem: TrustRegionProblem, settings: SolverSettings) -> tuple[np.ndarray, int]:
    """Maximize the concave dual over (lam, mu >= 0) by quasi-Newton ascent
    with clamping and gradient projection on the mu bound."""
    evals = 0

    def evaluate(point):
        nonlocal evals
        evals += 1
        g, gl, gm = dual_value_and_grad(point[0], point[1], problem, settings=settings)
        return g, np.array([gl, gm])

    def line_search(x, g, pg, direction):
        alpha = 1.0
        for _ in range(LS_MAX_HALVINGS):
            trial = np.array([x[0] + alpha * direction[0], max(0.0, x[1] + alpha * direction[1])])
            if np.array_equal(trial, x):
                return None
            g_t, grad_t = evaluate(trial)
            if g_t > g + LS_SLOPE * float(pg @ (trial - x)) or g_t > g:
                return trial, g_t, grad_t
            alpha *= 0.5
        return None

    x = np.zeros(2)
    g, grad = evaluate(x)
    h_inv = np.eye(2)
    stalls = 0
    for _ in range(settings.dual_max_iter):
        pg = grad.copy()
        if x[1] <= 0.0 and pg[1] < 0.0:
            pg[1] = 0.0
        if float(np.linalg.norm(pg)) <= settings.dual_grad_tol:
            break
        direction = h_inv @ grad
        if float(direction @ pg) <= 0.0:
            h_inv = np.eye(2)
            direction = pg
        step = line_search(x, g, pg, direction)
        if step is None and not np.array_equal(direction, pg):
            # quasi-Newton direction exhausted; retry once along the
            # projected gradient before declaring a kink optimum
            h_inv = np.eye(2)
            step = line_search(x, g, pg, pg)
        if step is None:
            break
        x_new, g_new, grad_new = step
        if g_new - g <= 1e-13 * (1.0 + abs(g_new)):
            stalls += 1
        else:
            stalls = 0
        s = x_new - x
        y = grad - grad_new
        sy = float(s @ y)
        if sy > 1e-12:
            rho = 1.0 / sy
            eye = np.eye(2)
            h_inv = (eye - rho * np.outer(s, y)) @ h_inv @ (eye - rho * np.outer(y, s))
            h_inv += rho * np.outer(s, s)
        x, g, grad = x_new, g_new, grad_new
        if stalls >= 2:
            break
    return x, evals


def _nelder_mead(problem: TrustRegionProblem, settings: SolverSettings) -> tuple[np.ndarray, int]:
    """Maximize the L0 dual by simplex search; mu < 0 vertices are rejected
    with an infinite penalty."""
    evals = 0

    def cost(point) -> float:
        nonlocal evals
        if point[1] < 0.0:
            return np.inf
        evals += 1
        g, _, _ = dual_value_and_grad(point[0], point[1], problem, settings=settings)
        return -g

    pts = [np.array([0.0, 0.0]), np.array([0.1, 0.0]), np.array([0.0, 0.1])]
    vals = [cost(p) for p in pts]
    for _ in range(NM_MAX_ITER):
        order = sorted(range(3), key=lambda i: vals[i])
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        spread = abs(vals[2] - vals[0])
        size = max(float(np.max(np.abs(pts[1] - pts[0]))), float(np.max(np.abs(pts[2] - pts[0]))))
        if spread <= 1e-12 * (1.0 + abs(vals[0])) and size <= 1e-10:
            break
        centroid = 0.5 * (pts[0] + pts[1])
        reflected = centroid + NM_ALPHA * (centroid - pts[2])
        f_r = cost(reflected)
        if f_r < vals[0]:
            expanded = centroid + NM_GAMMA * (centroid - pts[2])
            f_e = cost(expanded)
            if f_e < f_r:
                pts[2], vals[2] = expanded, f_e
            else:
                pts[2], vals[2] = reflected, f_r
        elif f_r < vals[1]:
            pts[2], vals[2] = reflected, f_r
        else:
            toward = reflected if f_r < vals[2] else pts[2]
            contracted = centroid + NM_BETA * (toward - centroid)
            f_c = cost(contracted)
            if f_c < min(f_r, vals[2]):
                pts[2], vals[2] = contracted, f_c
            else:
                for i in (1, 2):
                    pts[i] = pts[0] + NM_SIGMA * (pts[i] - pts[0])
                    vals[i] = cost(pts[i])
    best = int(np.argmin(vals))
    return pts[best], evals


def _ridge_candidates(problem: TrustRegionProblem) -> np.ndarray:
    """Breakpoints of the piecewise-linear map lambda -> g(lambda, 0)."""
    b, d = problem.b, problem.d
    lo, hi = problem.delta_lo, problem.delta_hi
    cands = [0.0]
    if problem.norm is NormKind.L1:
        nz = np.abs(b) > 0.0
        cands.extend((1.0 / b[nz]).tolist())
        cands.extend((-1.0 / b[nz]).tolist())
    else:
        for sign in (1.0, -1.0):
            w = np.abs(b)
            cap = np.where(sign * b > 0.0, d - lo, hi - d)
            keep = (w > 0.0) & (cap > 0.0)
            w, cap = w[keep], cap[keep]
            suffix = np.cumsum(w[np.argsort(cap)][::-1])[::-1]
            cands.extend((sign / suffix[suffix > 0.0]).tolist())
    return np.unique(np.asarray(cands))


def _exact_ridge_lambda(
    problem: TrustRegionProblem, settings: SolverSettings
) -> tuple[float, float, int]:
    """Exact maximum of the dual restricted to mu = 0, for L1 and Linf.

    With the ball multiplier at zero those duals are concave piecewise-linear
    in lambda (the componentwise inner minimizers switch at lambda = ±1/b_j
    for L1, and where suffix sums of |lambda b| cross 1 for Linf), so the
    maximum sits on a breakpoint. Ascent methods stall against the kink
    ridge; scanning the breakpoints finishes the job.
    """
    best_lam, best_g = 0.0, -np.inf
    cands = _ridge_candidates(problem)
    for lam in cands:
        g, _, _ = dual_value_and_grad(float(lam), 0.0, problem, settings=settings)
        if g > best_g:
            best_lam, best_g = float(lam), g
    return best_lam, best_g, cands.size


def _maximize(problem: TrustRegionProblem, settings: SolverSettings) -> tuple[DualState, int]:
    if problem.norm is NormKind.L0:
        point, evals = _nelder_mead(problem, settings)
    else:
        point, evals = _projected_bfgs(problem, settings)
        if problem.norm is not NormKind.L2 and point[1] <= 1e-12:
            g_incumbent, _, _ = dual_value_and_grad(
                float(point[0]), max(0.0, float(point[1])), problem, settings=settings
            )
            lam_exact, g_exact, used = _exact_ridge_lambda(problem, settings)
            evals += used + 1
            if g_exact > g_incumbent:
                point = np.array([lam_exact, 0.0])
    lam, mu = float(point[0]), max(0.0, float(point[1]))
    epsilon = None
    if problem.norm is NormKind.LINF:
        epsilon, _ = epsilon_search_linf(lam, mu, problem, settings.eps_search_rel_tol)
    return DualState(lam, mu, epsilon), evals


def maximize_dual(problem: TrustRegionProblem, settings: SolverSettings | None = None) -> DualState:
    """Dual variables maximizing g, starting from (0, 0)."""
    return _maximize(problem, settings or SolverSettings())[0]


def _monotone_bisect(phi, target: float, span: float = 1.0) -> float:
    """Root of the nondecreasing phi(t) = target, by expanding bracket plus
    bisection. Caller guarantees target lies within phi's closed range."""
    t_lo, t_hi = -span, span
    for _ in range(120):
        if phi(t_lo) <= target:
            break
        t_lo *= 2.0
    for _ in range(120):
        if phi(t_hi) >= target:
            break
        t_hi *= 2.0
    for _ in range(300):
        mid = 0.5 * (t_lo + t_hi)
        if phi(mid) < target:
            t_lo = mid
        else:
            t_hi = mid
    return t_hi


def _plane_range(b: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[float, float]:
    return float(np.sum(np.minimum(b * lo, b * hi))), float(np.sum(np.maximum(b * lo, b * hi)))


def _bounded_plane_min_norm(b: np.ndarray, c: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Smallest-L2 point of the box slice of the plane b.v = c.

    KKT form v = clip(gamma b / 2) with b.v(gamma) nondecreasing in gamma, so
    the multiplier is found by monotone bisection.
    """

    def point(gamma: float) -> np.ndarray:
        return np.clip(0.5 * gamma * b, lo, hi)

    gamma = _monotone_bisect(lambda t: float(b @ point(t)), c)
    return point(gamma)


def _aim_step(b: np.ndarray, c: float, lo: np.ndarray, hi: np.ndarray, r: float) -> np.ndarray:
    """Largest movement of b.delta toward an unreachable c inside ball and box."""
    w = b if c >= 0 else -b
    extreme = np.where(w > 0, hi, np.where(w < 0, lo, 0.0))
    if float(extreme @ extreme) <= r:
        return extreme

    def point(nu: float) -> np.ndarray:
        return np.clip(w / (2.0 * nu), lo, hi)

    def sq_norm(nu: float) -> float:
        v = point(nu)
        return float(v @ v)

    # squared length is nonincreasing in nu, from the box extreme (nu -> 0,
    # known > r here) down to 0, so a crossing of r exists
    nu_lo, nu_hi = 1e-300, 1.0
    for _ in range(200):
        if sq_norm(nu_hi) <= r:
            break
        nu_hi *= 2.0
    for _ in range(300):
        mid = 0.5 * (nu_lo + nu_hi)
        if sq_norm(mid) > r:
            nu_lo = mid
        else:
            nu_hi = mid
    return point(nu_hi)


def _recover_tilt(
    delta: np.ndarray, dual: DualState, problem: TrustRegionProblem, settings: SolverSettings
) -> np.ndarray:
    """Resolve inner-minimizer ties before the generic equality repair.

    At a kink of the dual the inner argmin is a face, and the single point the
    componentwise rule returns can carry a large plane residual even though
    the dual value is exact. Tilting lambda infinitesimally selects minimizers
    on the other side of the kink; the convex combination matching the plane
    lies on (numerically, next to) the same face, so it keeps the optimal
    value while killing the residual. Falls back to the untouched delta when
    no tilt flips the residual sign.
    """
    resid = float(problem.b @ delta) - problem.c
    if abs(resid) <= 1e-12 * max(1.0, abs(problem.c)):
        return delta
    scale = max(1.0, abs(dual.lam))
    for eta in (1e-9, 1e-7, 1e-5, 1e-3, 1e-1):
        lam_tilt = dual.lam + np.sign(resid) * eta * scale
        inner, _ = _inner_at(lam_tilt, dual.mu, problem, settings, None)
        resid_tilt = float(problem.b @ inner.delta) - problem.c
        if resid_tilt == resid:
            continue
        if (resid_tilt <= 0.0) != (resid <= 0.0) or resid_tilt == 0.0:
            theta = resid / (resid - resid_tilt)
            return delta + theta * (inner.delta - delta)
    return delta


def _repair_equality(
    delta: np.ndarray, b: np.ndarray, c: float, lo: np.ndarray, hi: np.ndarray
) -> np.ndarray:
    """Shift delta along b (with clamping) until the plane holds exactly."""

    def shifted(t: float) -> np.ndarray:
        return np.clip(delta + t * b, lo, hi)

    t = _monotone_bisect(lambda s: float(b @ shifted(s)), c)
    return shifted(t)


def _repair_ball(delta: np.ndarray, anchor: np.ndarray, r: float) -> np.ndarray:
    """Blend toward the minimum-norm plane point until the ball holds.

    The blend stays on the plane and inside the box (both endpoints satisfy
    them and both sets are convex); the squared length is convex along the
    segment, so the first crossing of r found by bisection is valid.
    """
    lo_t, hi_t = 0.0, 1.0
    if float(anchor @ anchor) > r:
        return anchor
    for _ in range(200):
        mid = 0.5 * (lo_t + hi_t)
        v = (1.0 - mid) * delta + mid * anchor
        if float(v @ v) > r:
            lo_t = mid
        else:
            hi_t = mid
    return (1.0 - hi_t) * delta + hi_t * anchor


def _repair_l0(
    delta: np.ndarray, problem: TrustRegionProblem, anchor: np.ndarray
) -> np.ndarray:
    """Make the dual-recovered L0 pattern feasible without destroying it.

    Components already restored (delta_j = d_j) are pinned; the rest are
    refilled with the minimum-norm plane solution so the ball has the best
    chance. When the pinned set makes the plane unreachable or the ball too
    tight, pinned components are released largest-residual-first, which only
    widens the reachable set; with everything released the anchor itself is
    returned (it is feasible whenever the problem is).
    """
    d, b, c, r = problem.d, problem.b, problem.c, problem.r
    lo, hi = problem.delta_lo, problem.delta_hi
    pinned = np.abs(delta - d) <= L0_DIFF_TOL
    release_order = np.argsort(-(d * d), kind="stable")
    slack = 1e-12 * max(1.0, abs(c))

    while True:
        free = ~pinned
        if not np.any(free):
            if abs(float(b @ d) - c) <= slack and float(d @ d) <= r + BALL_TOL:
                return d.copy()
        else:
            resid = c - float(b[pinned] @ d[pinned])
            cmin, cmax = _plane_range(b[free], lo[free], hi[free])
            if cmin - slack <= resid <= cmax + slack:
                fill = _bounded_plane_min_norm(b[free], resid, lo[free], hi[free])
                candidate = d.copy()
                candidate[free] = fill
                if float(candidate @ candidate) <= r + 0.5 * BALL_TOL:
                    return candidate
        for j in release_order:
            if pinned[j]:
                pinned[j] = False
                break
        else:
            return anchor


def solve(problem: TrustRegionProblem, settings: SolverSettings | None = None) -> Solution:
    """Full step solve: normalize, check reachability, maximize the dual,
    recover the primal step, and repair it onto the constraint set.

    The boundary normal is rescaled to unit length (with c rescaled to match)
    purely for dual conditioning; the constraint set is unchanged. Unreachable
    planes yield the feasible=False aiming step that moves b.delta as far
    toward c as the ball and box allow.
    """
    settings = settings or SolverSettings()
    scale = float(np.linalg.norm(problem.b))
    scaled = replace(problem, b=problem.b / scale, c=problem.c / scale)
    lo, hi = scaled.delta_lo, scaled.delta_hi
    bh, ch, r = scaled.b, scaled.c, scaled.r

    cmin, cmax = _plane_range(bh, lo, hi)
    slack = 1e-12 * max(1.0, abs(ch))
    reachable = cmin - slack <= ch <= cmax + slack
    anchor = None
    if reachable:
        anchor = _bounded_plane_min_norm(bh, ch, lo, hi)
        reachable = float(anchor @ anchor) <= r + 0.5 * BALL_TOL
    if not reachable:
        delta = _aim_step(bh, ch, lo, hi, r)
        objective = lp_distance(problem.x, problem.x_tilde + delta, problem.norm)
        return Solution(delta, objective, DualState(), feasible=False, iterations=0)

    dual, evals = _maximize(scaled, settings)
    inner, _ = _inner_at(dual.lam, dual.mu, scaled, settings, dual.epsilon)
    delta = np.clip(inner.delta, lo, hi)

    if problem.norm is NormKind.L0:
        delta = _repair_l0(delta, scaled, anchor)
    else:
        delta = _recover_tilt(delta, dual, scaled, settings)
        delta = np.clip(delta, lo, hi)
        delta = _repair_equality(delta, bh, ch, lo, hi)
        if float(delta @ delta) > r + BALL_TOL:
            delta = _repair_ball(delta, anchor, r)

    objective = lp_distance(problem.x, problem.x_tilde + delta, problem.norm)
    feasible = (
        float(delta @ delta) <= r + BALL_TOL
        and bool(np.all(delta >= lo - BOX_TOL))
        and bool(np.all(delta <= hi + BOX_TOL))
        and abs(float(problem.b @ delta) - problem.c) <= equality_tolerance(problem.c)
    )
    # the duals were found for the unit-normal problem; lam/scale gives the
    # same Lagrangian in the caller's units
    dual_out = DualState(dual.lam / scale, dual.mu, dual.epsilon)
    return Solution(delta, objective, dual_out, feasible, evals)
