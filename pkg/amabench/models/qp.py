"""High-accuracy minimization of strongly convex quadratics over simple sets.

These are the "exact oracles" the algorithms perturb: every inexact solution in
the library is measured against a point produced here.
"""

import logging
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, solve, solve_triangular
from scipy.optimize import lsq_linear

from amabench.errors import ToleranceNotReachedError

from .sets import AffineSet, BoxSet, ConvexSet

logger = logging.getLogger(__name__)

ACTIVE_SET_MAX_ITER = 100
HIGH_ACCURACY_STEPS = 10_000
FIXED_POINT_TOL = 1e-13


def solve_box_qp(
    H: np.ndarray,
    q: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    x0: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Minimize ½xᵀHx + qᵀx subject to lower <= x <= upper.

    Primal-dual active-set iteration started from the bounds active at ``x0``
    (or at the clipped unconstrained minimizer). If the active sets cycle the
    problem is handed to bounded-variable least squares.

    Args:
        H: Symmetric positive definite Hessian
        q: Linear term
        lower: Lower bounds (may contain -inf)
        upper: Upper bounds (may contain +inf)
        x0: Optional warm start

    Returns:
        The minimizer
    """
    q = np.asarray(q, dtype=float)
    if q.size == 0:
        return np.zeros(0)

    x = cho_solve(cho_factor(H), -q) if x0 is None else np.asarray(x0, dtype=float)
    at_lower = x <= lower
    at_upper = (x >= upper) & ~at_lower

    for _ in range(ACTIVE_SET_MAX_ITER):
        x = _solve_on_free_set(H, q, lower, upper, at_lower, at_upper)
        grad = H @ x + q
        free = ~(at_lower | at_upper)
        mult = np.where(free, 0.0, grad)
        with np.errstate(invalid="ignore"):
            new_lower = mult + (lower - x) > 0
            new_upper = mult + (upper - x) < 0
        if np.array_equal(new_lower, at_lower) and np.array_equal(new_upper, at_upper):
            return x
        at_lower, at_upper = new_lower, new_upper

    logger.warning(f"Active-set iteration did not settle in {ACTIVE_SET_MAX_ITER} passes, using BVLS")
    return _bounded_least_squares(H, q, lower, upper)


def _solve_on_free_set(H, q, lower, upper, at_lower, at_upper) -> np.ndarray:
    x = np.where(at_lower, lower, np.where(at_upper, upper, 0.0))
    free = ~(at_lower | at_upper)
    if free.any():
        fixed = ~free
        rhs = -q[free]
        if fixed.any():
            rhs = rhs - H[np.ix_(free, fixed)] @ x[fixed]
        x[free] = solve(H[np.ix_(free, free)], rhs, assume_a="pos")
    return x


def _bounded_least_squares(H, q, lower, upper) -> np.ndarray:
    # ½xᵀHx + qᵀx = ½‖Rx − b‖² + const with H = RᵀR and Rᵀb = −q
    R = cholesky(H)
    b = -solve_triangular(R, q, trans="T")
    result = lsq_linear(R, b, bounds=(lower, upper), method="bvls", tol=1e-14)
    if not result.success:
        raise ToleranceNotReachedError(f"BVLS fallback failed: {result.message}")
    return result.x


def projected_gradient_solve(
    H: np.ndarray,
    q: np.ndarray,
    project: Callable[[np.ndarray], np.ndarray],
    x0: Optional[np.ndarray] = None,
    tol: float = FIXED_POINT_TOL,
    max_steps: int = HIGH_ACCURACY_STEPS,
) -> np.ndarray:
    """Projected gradient with step 1/λ_max(H), stopped on the fixed-point residual."""
    step = 1.0 / float(np.linalg.eigvalsh(H)[-1])
    x = project(np.zeros(q.size) if x0 is None else np.asarray(x0, dtype=float))
    for _ in range(max_steps):
        x_next = project(x - step * (H @ x + q))
        if np.linalg.norm(x_next - x) <= tol * max(1.0, float(np.linalg.norm(x_next))):
            return x_next
        x = x_next
    raise ToleranceNotReachedError(
        f"Projected gradient did not reach residual {tol:g} within {max_steps} steps"
    )


def minimize_quadratic(
    H: np.ndarray,
    q: np.ndarray,
    domain: Optional[ConvexSet] = None,
    warm: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Minimize ½xᵀHx + qᵀx over ``domain`` (whole space when None)."""
    if domain is None or (isinstance(domain, BoxSet) and domain.is_everything):
        return cho_solve(cho_factor(H), -np.asarray(q, dtype=float))
    if isinstance(domain, BoxSet):
        return solve_box_qp(H, q, domain.lower, domain.upper, warm)
    if isinstance(domain, AffineSet):
        n, m = H.shape[0], domain.G.shape[0]
        kkt = np.block([[H, domain.G.T], [domain.G, np.zeros((m, m))]])
        rhs = np.concatenate([-np.asarray(q, dtype=float), domain.d])
        return np.linalg.lstsq(kkt, rhs, rcond=None)[0][:n]
    return projected_gradient_solve(H, q, domain.project, warm)
