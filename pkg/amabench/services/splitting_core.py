"""Proximal operators, the dual pair (φ, ψ) of a split problem, and the dual function.

For min f(x) + g(z) s.t. Ax + Bz = c the dual problem is
    min_λ φ(λ) + ψ(λ),  φ(λ) = f⋆(Aᵀλ),  ψ(λ) = g⋆(Bᵀλ) − cᵀλ,
and D(λ) = −φ(λ) − ψ(λ).
"""

import logging
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvalsh
from scipy.optimize import brentq

from amabench.config import get_settings
from amabench.errors import ConfigError, StepSizeError, ToleranceNotReachedError, UnsupportedObjectiveError
from amabench.models import (
    InexactProxResult,
    Objective,
    QuadraticFn,
    SeparableSum,
    SplitProblem,
    ZeroFunction,
)

logger = logging.getLogger(__name__)

DUAL_UNBOUNDED = float("-inf")
Z_STEP_MAX_ITER = 100_000


def prox(g: Objective, v: np.ndarray, tau: float) -> np.ndarray:
    """argmin_w τ·g(w) + ½‖w − v‖²."""
    if not tau > 0:
        raise StepSizeError(f"Prox parameter must be positive, got {tau}")
    return g.prox(np.asarray(v, dtype=float), tau)


def prox_objective(g: Objective, v: np.ndarray, tau: float, w: np.ndarray, finite_only: bool = False) -> float:
    """τ·g(w) + ½‖w − v‖²."""
    value = g.finite_value(w) if finite_only else g.value(w)
    return tau * value + 0.5 * float(np.sum((np.asarray(w) - v) ** 2))


def prox_inexact(
    g: Objective,
    v: np.ndarray,
    tau: float,
    epsilon: float,
    feasible_only: bool = True,
    rng: Optional[np.random.Generator] = None,
) -> InexactProxResult:
    """A point whose prox objective is within ``epsilon`` of the minimum.

    The exact prox is moved along a random direction orthogonal to (prox − v)
    by a distance chosen so the objective gap equals ``epsilon``. With
    ``feasible_only`` the moved point is re-projected onto the domain of g
    (when g restricts one) and the gap is measured after projection; otherwise
    only the finite part of g enters the measured gap.

    Returns:
        The point and the gap it achieves (at most ``epsilon``)
    """
    if epsilon < 0:
        raise ConfigError(f"Prox error must be nonnegative, got {epsilon}")
    v = np.asarray(v, dtype=float)
    exact = prox(g, v, tau)
    if epsilon == 0 or exact.size == 0:
        return InexactProxResult(exact, 0.0)

    rng = rng if rng is not None else np.random.default_rng()
    direction = rng.standard_normal(exact.size)
    normal = exact - v
    if np.linalg.norm(normal) > 0:
        direction -= (direction @ normal) / (normal @ normal) * normal
    if np.linalg.norm(direction) == 0:
        direction = rng.standard_normal(exact.size)
    direction /= np.linalg.norm(direction)

    projector = g.domain_projector() if feasible_only else None
    finite_only = projector is None
    base = prox_objective(g, v, tau, exact, finite_only)

    def moved(s: float) -> np.ndarray:
        point = exact + s * direction
        return projector(point) if projector is not None else point

    def gap(s: float) -> float:
        value = prox_objective(g, v, tau, moved(s), finite_only) - base
        return min(value, 1e300)

    # the prox objective is 1-strongly convex, so the gap at sqrt(2ε) is at least ε before projection
    s_hi = np.sqrt(2.0 * epsilon)
    while gap(s_hi) < epsilon and s_hi < 1e6:
        s_hi *= 2.0
    if gap(s_hi) <= epsilon:
        point = moved(s_hi)
    else:
        s = brentq(lambda t: gap(t) - epsilon, 0.0, s_hi, xtol=1e-15 * max(1.0, s_hi))
        while gap(s) > epsilon:
            s *= 0.5
        point = moved(s)
    achieved = max(prox_objective(g, v, tau, point, finite_only) - base, 0.0)
    return InexactProxResult(point, float(achieved))


def augmented_z_step(p: SplitProblem, w: np.ndarray, tau: float, warm: Optional[np.ndarray] = None,
                     inner_tol: Optional[float] = None) -> np.ndarray:
    """argmin_z g(z) + (τ/2)‖Bz − w‖².

    Uses the diagonal-metric prox when BᵀB is diagonal, a linear solve for
    g ≡ 0 or an unconstrained quadratic g, and FISTA otherwise.
    """
    inner_tol = inner_tol if inner_tol is not None else get_settings().inner_tol
    B, g = p.B, p.g
    b = np.asarray(B.T @ w).ravel()
    D = p.btb_diagonal
    if D is not None and np.all(D > 0):
        try:
            return g.prox_diag(b / D, tau * D)
        except UnsupportedObjectiveError:
            pass
    dense_B = B.toarray() if sp.issparse(B) else B
    if isinstance(g, ZeroFunction):
        return np.linalg.lstsq(dense_B, w, rcond=None)[0]
    if isinstance(g, QuadraticFn) and not g.has_constraints:
        return np.linalg.solve(g.H + tau * dense_B.T @ dense_B, tau * b - g.h)
    return _fista_z_step(g, dense_B, w, tau, warm, inner_tol)


def _fista_z_step(g: Objective, B: np.ndarray, w: np.ndarray, tau: float,
                  warm: Optional[np.ndarray], tol: float) -> np.ndarray:
    lipschitz = tau * float(np.linalg.norm(B, 2)) ** 2
    if lipschitz == 0:
        return g.prox(np.zeros(g.dim) if warm is None else warm, 1.0)
    step = 1.0 / lipschitz
    z = np.zeros(g.dim) if warm is None else np.asarray(warm, dtype=float).copy()
    y, t = z.copy(), 1.0
    for _ in range(Z_STEP_MAX_ITER):
        z_next = g.prox(y - step * tau * (B.T @ (B @ y - w)), step)
        if np.linalg.norm(z_next - z) <= tol * max(1.0, float(np.linalg.norm(z_next))):
            return z_next
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = z_next + ((t - 1.0) / t_next) * (z_next - z)
        z, t = z_next, t_next
    raise ToleranceNotReachedError(f"z-step FISTA did not reach {tol:g} in {Z_STEP_MAX_ITER} iterations")


def _is_identity(A) -> bool:
    if A.shape[0] != A.shape[1]:
        return False
    if sp.issparse(A):
        return (A != sp.identity(A.shape[0], format="csr")).nnz == 0
    return bool(np.array_equal(A, np.eye(A.shape[0])))


def dual_curvature(p: SplitProblem) -> Optional[tuple[float, float]]:
    """Extreme eigenvalues of A H⁻¹ Aᵀ when f has a Hessian, else None."""
    f = p.f
    if isinstance(f, SeparableSum) and _is_identity(p.A):
        hessians = [b.hessian() for b in f.blocks]
        if any(H is None for H in hessians):
            return None
        eigs = np.concatenate([1.0 / eigvalsh(H) for H in hessians])
        return float(eigs.min()), float(eigs.max())
    H = f.hessian()
    if H is None:
        return None
    A = p.A.toarray() if sp.issparse(p.A) else p.A
    AHA = A @ np.linalg.solve(H, A.T)
    eigs = eigvalsh(0.5 * (AHA + AHA.T))
    return float(max(eigs[0], 0.0)), float(eigs[-1])


class DualSmooth(Objective):
    """φ(λ) = f⋆(Aᵀλ), with ∇φ(λ) = A·x⋆(λ)."""

    def __init__(self, p: SplitProblem):
        super().__init__(p.n_c)
        self.problem = p
        self.generic_lipschitz = p.rho_A / p.sigma_f
        curvature = dual_curvature(p)
        self.quadratic_assumption = curvature is not None and not p.f.has_constraints
        if curvature is None:
            self.exact_lipschitz = None
            self.lipschitz = self.generic_lipschitz
        else:
            self.exact_lipschitz = curvature[1]
            self.lipschitz = min(curvature[1], self.generic_lipschitz)
        self.sigma = curvature[0] if self.quadratic_assumption else 0.0

    def minimizer(self, lam: np.ndarray, warm: Optional[np.ndarray] = None) -> np.ndarray:
        """x⋆(λ) = argmin_x f(x) − ⟨λ, Ax⟩."""
        y = np.asarray(self.problem.A.T @ lam).ravel()
        return self.problem.f.linear_argmin(y, warm, get_settings().inner_tol)

    def value(self, lam):
        y = np.asarray(self.problem.A.T @ lam).ravel()
        return -self.problem.f.neg_conjugate(y, get_settings().inner_tol)

    def gradient(self, lam, warm: Optional[np.ndarray] = None) -> np.ndarray:
        return np.asarray(self.problem.A @ self.minimizer(lam, warm)).ravel()

    @property
    def gamma(self) -> float:
        """σ_φ / L(∇φ)."""
        return self.sigma / self.lipschitz if self.lipschitz > 0 else 0.0


class DualNonsmooth(Objective):
    """ψ(λ) = g⋆(Bᵀλ) − cᵀλ."""

    def __init__(self, p: SplitProblem):
        super().__init__(p.n_c)
        self.problem = p

    def value(self, lam):
        p = self.problem
        y = np.asarray(p.B.T @ lam).ravel()
        inner = p.g.neg_conjugate(y, get_settings().inner_tol)
        if inner == -np.inf:
            return np.inf
        return -inner - float(p.c @ lam)

    def finite_value(self, lam):
        if isinstance(self.problem.g, ZeroFunction):
            return -float(self.problem.c @ lam)
        return self.value(lam)

    def z_step(self, u: np.ndarray, tau: float, warm: Optional[np.ndarray] = None) -> np.ndarray:
        """z minimizing g(z) + (τ/2)‖Bz − (c + u/τ)‖²."""
        return augmented_z_step(self.problem, self.problem.c + u / tau, tau, warm)

    def prox(self, u, tau):
        p = self.problem
        z = self.z_step(u, tau)
        return u + tau * (p.c - np.asarray(p.B @ z).ravel())

    def domain_projector(self):
        p = self.problem
        if not isinstance(p.g, ZeroFunction):
            return None
        D = p.btb_diagonal
        if D is not None and np.all(D > 0):
            def project(lam):
                y = np.asarray(p.B.T @ lam).ravel()
                return lam - np.asarray(p.B @ (y / D)).ravel()
            return project
        B = p.B.toarray() if sp.issparse(p.B) else p.B
        pinv = np.linalg.pinv(B)

        def project(lam):
            return lam - B @ (pinv @ lam)
        return project


def dual_objectives(p: SplitProblem) -> tuple[DualSmooth, DualNonsmooth]:
    """The smooth/nonsmooth dual pair (φ, ψ) of a split problem."""
    if not p.sigma_f > 0:
        raise ConfigError("f must be strongly convex to form the smooth dual term")
    return DualSmooth(p), DualNonsmooth(p)


def dual_value(p: SplitProblem, lam: np.ndarray, inner_tol: Optional[float] = None) -> float:
    """D(λ) = inf_{x,z} f(x) + g(z) + λᵀ(c − Ax − Bz); DUAL_UNBOUNDED when the infimum is −∞."""
    inner_tol = inner_tol if inner_tol is not None else get_settings().inner_tol
    lam = np.asarray(lam, dtype=float)
    z_part = p.g.neg_conjugate(np.asarray(p.B.T @ lam).ravel(), inner_tol)
    if z_part == -np.inf:
        return DUAL_UNBOUNDED
    x_part = p.f.neg_conjugate(np.asarray(p.A.T @ lam).ravel(), inner_tol)
    if x_part == -np.inf:
        return DUAL_UNBOUNDED
    return float(x_part + z_part + p.c @ lam)
