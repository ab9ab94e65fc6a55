"""Objectives and the two-block structured problem min f(x) + g(z) s.t. Ax + Bz = c."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import block_diag, cho_factor, cho_solve
from scipy.sparse.linalg import svds

from amabench.errors import (
    ConfigError,
    DimensionError,
    ToleranceNotReachedError,
    UnsupportedObjectiveError,
)

from .qp import minimize_quadratic
from .sets import AffineSet, BoxSet, ConvexSet

logger = logging.getLogger(__name__)

Matrix = Union[np.ndarray, sp.spmatrix, sp.sparray]

DEFAULT_INNER_TOL = 1e-10
SMOOTH_MAX_STEPS = 100_000


class Objective(ABC):
    """Convex objective over R^dim.

    Subclasses implement whichever oracles they support; the rest raise
    UnsupportedObjectiveError.
    """

    separable: bool = False
    sigma: float = 0.0
    lipschitz: float = np.inf

    def __init__(self, dim: int):
        self.dim = int(dim)

    @abstractmethod
    def value(self, z: np.ndarray) -> float:
        """Objective value (+inf outside the domain)."""

    def prox(self, v: np.ndarray, tau: float) -> np.ndarray:
        """argmin_w tau*g(w) + ½‖w − v‖²."""
        raise UnsupportedObjectiveError(f"{type(self).__name__} has no prox oracle")

    def prox_diag(self, v: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """argmin_w g(w) + ½Σ weights_j (w_j − v_j)²."""
        raise UnsupportedObjectiveError(f"{type(self).__name__} has no diagonal-metric prox")

    def linear_argmin(self, y: np.ndarray, warm: Optional[np.ndarray] = None,
                      inner_tol: float = DEFAULT_INNER_TOL) -> np.ndarray:
        """argmin_z g(z) − yᵀz."""
        raise UnsupportedObjectiveError(f"{type(self).__name__} cannot minimize against a linear term")

    def neg_conjugate(self, y: np.ndarray, inner_tol: float = DEFAULT_INNER_TOL) -> float:
        """min_z g(z) − yᵀz, i.e. −g⋆(y); may be -inf."""
        z = self.linear_argmin(y, inner_tol=inner_tol)
        return self.finite_value(z) - float(y @ z)

    def finite_value(self, z: np.ndarray) -> float:
        """Value of the part of the objective that is finite everywhere."""
        return self.value(z)

    def domain_projector(self) -> Optional[Callable[[np.ndarray], np.ndarray]]:
        """Projection onto the effective domain, if the objective restricts it."""
        return None

    def hessian(self) -> Optional[np.ndarray]:
        return None

    @property
    def has_constraints(self) -> bool:
        return False


class ZeroFunction(Objective):
    """g ≡ 0."""

    separable = True

    def value(self, z):
        return 0.0

    def prox(self, v, tau):
        return np.array(v, dtype=float)

    def prox_diag(self, v, weights):
        return np.array(v, dtype=float)

    def linear_argmin(self, y, warm=None, inner_tol=DEFAULT_INNER_TOL):
        if np.max(np.abs(y), initial=0.0) > inner_tol:
            raise UnsupportedObjectiveError("Linear term makes the zero function unbounded below")
        return np.zeros(self.dim)

    def neg_conjugate(self, y, inner_tol=DEFAULT_INNER_TOL):
        return 0.0 if np.max(np.abs(y), initial=0.0) <= inner_tol else -np.inf


class Indicator(Objective):
    """Indicator of a convex set."""

    def __init__(self, convex_set: ConvexSet):
        super().__init__(convex_set.dim)
        self.set = convex_set
        self.separable = isinstance(convex_set, BoxSet)

    def value(self, z):
        return 0.0 if self.set.contains(z) else np.inf

    def finite_value(self, z):
        return 0.0

    def prox(self, v, tau):
        return self.set.project(v)

    def prox_diag(self, v, weights):
        if isinstance(self.set, BoxSet) or np.allclose(weights, weights[0]):
            return self.set.project(v)
        raise UnsupportedObjectiveError("Weighted projection onto a non-box set is not available")

    def linear_argmin(self, y, warm=None, inner_tol=DEFAULT_INNER_TOL):
        if not isinstance(self.set, BoxSet) or not np.isfinite(self.set.support(y)):
            raise UnsupportedObjectiveError("Linear minimization needs a box with finite support")
        z = np.where(y > 0, self.set.upper, np.where(y < 0, self.set.lower, 0.0))
        return self.set.project(z)

    def neg_conjugate(self, y, inner_tol=DEFAULT_INNER_TOL):
        if isinstance(self.set, BoxSet):
            return -self.set.support(y)
        if isinstance(self.set, AffineSet):
            nu = np.linalg.lstsq(self.set.G.T, y, rcond=None)[0]
            if np.linalg.norm(self.set.G.T @ nu - y) > inner_tol * max(1.0, float(np.linalg.norm(y))):
                return -np.inf
            return -float(nu @ self.set.d)
        raise UnsupportedObjectiveError("Conjugate of an oracle-defined set is not available")

    def domain_projector(self):
        return self.set.project

    @property
    def has_constraints(self) -> bool:
        return not (isinstance(self.set, BoxSet) and self.set.is_everything)


class L1Norm(Objective):
    """weight * ‖z‖₁."""

    separable = True

    def __init__(self, dim: int, weight: float = 1.0):
        if weight < 0:
            raise ConfigError("L1 weight must be nonnegative")
        super().__init__(dim)
        self.weight = float(weight)

    def value(self, z):
        return self.weight * float(np.sum(np.abs(z)))

    def prox(self, v, tau):
        return _soft_threshold(np.asarray(v, dtype=float), tau * self.weight)

    def prox_diag(self, v, weights):
        return _soft_threshold(np.asarray(v, dtype=float), self.weight / np.asarray(weights))

    def linear_argmin(self, y, warm=None, inner_tol=DEFAULT_INNER_TOL):
        if np.max(np.abs(y), initial=0.0) > self.weight + inner_tol:
            raise UnsupportedObjectiveError("Linear term makes the l1 objective unbounded below")
        return np.zeros(self.dim)

    def neg_conjugate(self, y, inner_tol=DEFAULT_INNER_TOL):
        return 0.0 if np.max(np.abs(y), initial=0.0) <= self.weight + inner_tol else -np.inf


def _soft_threshold(v: np.ndarray, threshold) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


class QuadraticFn(Objective):
    """½zᵀHz + hᵀz + offset, optionally restricted to a convex domain.

    H must be symmetric positive definite; sigma = λ_min(H), lipschitz = λ_max(H).
    """

    def __init__(self, H, h=None, offset: float = 0.0, domain: Optional[ConvexSet] = None):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        if H.shape[0] != H.shape[1]:
            raise DimensionError(f"Hessian must be square, got {H.shape}")
        if not np.allclose(H, H.T, atol=1e-12 * max(1.0, float(np.abs(H).max(initial=0.0)))):
            raise ConfigError("Hessian must be symmetric")
        super().__init__(H.shape[0])
        self.H = 0.5 * (H + H.T)
        self.h = np.zeros(self.dim) if h is None else np.asarray(h, dtype=float).ravel()
        if self.h.size != self.dim:
            raise DimensionError(f"Linear term has length {self.h.size}, expected {self.dim}")
        if domain is not None and domain.dim != self.dim:
            raise DimensionError(f"Domain has dimension {domain.dim}, expected {self.dim}")
        eigs = np.linalg.eigvalsh(self.H) if self.dim else np.array([1.0])
        if eigs[0] <= 0:
            raise ConfigError(f"Hessian is not positive definite (λ_min = {eigs[0]:.3e})")
        self.sigma = float(eigs[0])
        self.lipschitz = float(eigs[-1])
        self.offset = float(offset)
        self.domain = domain
        self._cho = cho_factor(self.H) if self.dim else None
        self._diagonal = bool(np.count_nonzero(self.H - np.diag(np.diag(self.H))) == 0)

    def finite_value(self, z):
        z = np.asarray(z, dtype=float)
        return 0.5 * float(z @ self.H @ z) + float(self.h @ z) + self.offset

    def value(self, z):
        if self.domain is not None and not self.domain.contains(z):
            return np.inf
        return self.finite_value(z)

    def gradient(self, z):
        return self.H @ np.asarray(z, dtype=float) + self.h

    def prox(self, v, tau):
        return minimize_quadratic(np.eye(self.dim) + tau * self.H, tau * self.h - np.asarray(v, dtype=float),
                                  self.domain)

    def prox_diag(self, v, weights):
        if not self._diagonal or not (self.domain is None or isinstance(self.domain, BoxSet)):
            raise UnsupportedObjectiveError("Diagonal-metric prox needs a diagonal Hessian and a box domain")
        weights = np.asarray(weights, dtype=float)
        z = (weights * np.asarray(v, dtype=float) - self.h) / (np.diag(self.H) + weights)
        return z if self.domain is None else self.domain.project(z)

    def linear_argmin(self, y, warm=None, inner_tol=DEFAULT_INNER_TOL):
        y = np.asarray(y, dtype=float)
        if self.domain is None or (isinstance(self.domain, BoxSet) and self.domain.is_everything):
            return cho_solve(self._cho, y - self.h)
        return minimize_quadratic(self.H, self.h - y, self.domain, warm)

    def domain_projector(self):
        return None if self.domain is None else self.domain.project

    def hessian(self):
        return self.H

    @property
    def has_constraints(self) -> bool:
        return self.domain is not None and not (isinstance(self.domain, BoxSet) and self.domain.is_everything)

    def with_domain(self, domain: Optional[ConvexSet]) -> "QuadraticFn":
        return QuadraticFn(self.H, self.h, self.offset, domain)


class SmoothFn(Objective):
    """Generic strongly convex, L-smooth objective given by callables."""

    def __init__(self, dim: int, value_fn: Callable[[np.ndarray], float],
                 grad_fn: Callable[[np.ndarray], np.ndarray], sigma: float, lipschitz: float):
        if not 0 < sigma <= lipschitz:
            raise ConfigError(f"Need 0 < sigma <= lipschitz, got sigma={sigma}, L={lipschitz}")
        super().__init__(dim)
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self.sigma = float(sigma)
        self.lipschitz = float(lipschitz)

    def value(self, z):
        return float(self._value_fn(np.asarray(z, dtype=float)))

    def gradient(self, z):
        return np.asarray(self._grad_fn(np.asarray(z, dtype=float)), dtype=float)

    def linear_argmin(self, y, warm=None, inner_tol=DEFAULT_INNER_TOL):
        y = np.asarray(y, dtype=float)
        return _accelerated_descent(lambda z: self.gradient(z) - y, self.sigma, self.lipschitz,
                                    np.zeros(self.dim) if warm is None else warm, inner_tol)

    def prox(self, v, tau):
        v = np.asarray(v, dtype=float)
        return _accelerated_descent(lambda w: tau * self.gradient(w) + (w - v),
                                    1.0 + tau * self.sigma, 1.0 + tau * self.lipschitz, v, DEFAULT_INNER_TOL)


def _accelerated_descent(grad: Callable[[np.ndarray], np.ndarray], sigma: float, lipschitz: float,
                         x0: np.ndarray, tol: float) -> np.ndarray:
    """Nesterov's constant-momentum scheme for strongly convex smooth problems.

    Stops when ‖∇‖/sigma (a bound on the distance to the minimizer) drops below tol.
    """
    ratio = np.sqrt(sigma / lipschitz)
    momentum = (1.0 - ratio) / (1.0 + ratio)
    x = np.asarray(x0, dtype=float).copy()
    y = x.copy()
    for _ in range(SMOOTH_MAX_STEPS):
        g = grad(y)
        if np.linalg.norm(g) / sigma <= tol:
            return y
        x_next = y - g / lipschitz
        y = x_next + momentum * (x_next - x)
        x = x_next
    raise ToleranceNotReachedError(f"Gradient inner loop did not reach tolerance {tol:g}")


class CustomFn(Objective):
    """Objective defined by a value callable and a prox oracle."""

    def __init__(self, dim: int, value_fn: Callable[[np.ndarray], float],
                 prox_fn: Callable[[np.ndarray, float], np.ndarray]):
        super().__init__(dim)
        self._value_fn = value_fn
        self._prox_fn = prox_fn

    def value(self, z):
        return float(self._value_fn(np.asarray(z, dtype=float)))

    def prox(self, v, tau):
        return np.asarray(self._prox_fn(np.asarray(v, dtype=float), tau), dtype=float)


class SeparableSum(Objective):
    """Block-separable sum Σ_i f_i(x_i) over a stacked vector."""

    def __init__(self, blocks: Sequence[Objective]):
        if not blocks:
            raise ConfigError("SeparableSum needs at least one block")
        self.blocks = tuple(blocks)
        sizes = [b.dim for b in self.blocks]
        super().__init__(sum(sizes))
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        self.slices = tuple(slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]))
        self.separable = all(b.separable for b in self.blocks)
        self.sigma = min(b.sigma for b in self.blocks)
        self.lipschitz = max(b.lipschitz for b in self.blocks)

    def split(self, z: np.ndarray) -> list[np.ndarray]:
        return [z[sl] for sl in self.slices]

    def value(self, z):
        return float(sum(b.value(z[sl]) for b, sl in zip(self.blocks, self.slices)))

    def finite_value(self, z):
        return float(sum(b.finite_value(z[sl]) for b, sl in zip(self.blocks, self.slices)))

    def gradient(self, z):
        return np.concatenate([b.gradient(z[sl]) for b, sl in zip(self.blocks, self.slices)])

    def prox(self, v, tau):
        return np.concatenate([b.prox(v[sl], tau) for b, sl in zip(self.blocks, self.slices)])

    def prox_diag(self, v, weights):
        return np.concatenate([b.prox_diag(v[sl], weights[sl]) for b, sl in zip(self.blocks, self.slices)])

    def linear_argmin(self, y, warm=None, inner_tol=DEFAULT_INNER_TOL):
        return np.concatenate([
            b.linear_argmin(y[sl], None if warm is None else warm[sl], inner_tol)
            for b, sl in zip(self.blocks, self.slices)
        ])

    def neg_conjugate(self, y, inner_tol=DEFAULT_INNER_TOL):
        total = 0.0
        for b, sl in zip(self.blocks, self.slices):
            part = b.neg_conjugate(y[sl], inner_tol)
            if part == -np.inf:
                return -np.inf
            total += part
        return total

    def domain_projector(self):
        projectors = [b.domain_projector() for b in self.blocks]
        if all(p is None for p in projectors):
            return None

        def project(z):
            return np.concatenate([
                z[sl] if p is None else p(z[sl]) for p, sl in zip(projectors, self.slices)
            ])
        return project

    def hessian(self):
        hessians = [b.hessian() for b in self.blocks]
        if any(H is None for H in hessians):
            return None
        return block_diag(*hessians)

    @property
    def has_constraints(self) -> bool:
        return any(b.has_constraints for b in self.blocks)


def spectral_norm(M: Matrix) -> float:
    """Largest singular value of a dense or sparse matrix."""
    if sp.issparse(M):
        if min(M.shape) <= 2:
            return float(np.linalg.norm(M.toarray(), 2))
        return float(svds(M.astype(float), k=1, return_singular_vectors=False)[0])
    M = np.atleast_2d(M)
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def _as_matrix(M) -> Matrix:
    if sp.issparse(M):
        return sp.csr_matrix(M, dtype=float)
    return np.atleast_2d(np.asarray(M, dtype=float))


@dataclass(frozen=True)
class InexactProxResult:
    """Point returned by an ε-inexact prox and the objective gap it achieved."""

    point: np.ndarray
    epsilon: float


@dataclass(frozen=True)
class SplitProblem:
    """min f(x) + g(z) subject to Ax + Bz = c, with f strongly convex."""

    f: Objective
    g: Objective
    A: Matrix
    B: Matrix
    c: np.ndarray = field(default=None)

    def __post_init__(self):
        A = _as_matrix(self.A)
        B = _as_matrix(self.B)
        c = np.zeros(A.shape[0]) if self.c is None else np.asarray(self.c, dtype=float).ravel()
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", c)
        if A.shape[1] != self.f.dim:
            raise DimensionError(f"A has {A.shape[1]} columns but f acts on R^{self.f.dim}")
        if B.shape[1] != self.g.dim:
            raise DimensionError(f"B has {B.shape[1]} columns but g acts on R^{self.g.dim}")
        if not A.shape[0] == B.shape[0] == c.size:
            raise DimensionError(f"Row counts differ: A {A.shape[0]}, B {B.shape[0]}, c {c.size}")
        if not self.f.sigma > 0:
            raise ConfigError("f must be strongly convex (sigma_f > 0)")

    @property
    def sigma_f(self) -> float:
        return self.f.sigma

    @property
    def n_c(self) -> int:
        return self.c.size

    @cached_property
    def rho_A(self) -> float:
        """Spectral radius of AᵀA, i.e. ‖A‖₂²."""
        return spectral_norm(self.A) ** 2

    @cached_property
    def norm_B(self) -> float:
        return spectral_norm(self.B)

    @cached_property
    def btb_diagonal(self) -> Optional[np.ndarray]:
        """Diagonal of BᵀB when BᵀB is diagonal, else None."""
        if sp.issparse(self.B):
            gram = (self.B.T @ self.B).tocoo()
            if np.any((gram.row != gram.col) & (gram.data != 0)):
                return None
            return np.asarray(gram.diagonal(), dtype=float)
        gram = self.B.T @ self.B
        if np.count_nonzero(gram - np.diag(np.diag(gram))):
            return None
        return np.diag(gram).copy()
