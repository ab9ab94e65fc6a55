"""Convex sets with exact Euclidean projections."""

from abc import ABC, abstractmethod
from typing import Callable

import numpy as np

from amabench.errors import ConfigError, DimensionError

FEASIBILITY_TOL = 1e-9


class ConvexSet(ABC):
    """Closed convex set exposing its Euclidean projection."""

    kind: str = "abstract"

    def __init__(self, dim: int):
        self.dim = int(dim)

    @abstractmethod
    def project(self, v: np.ndarray) -> np.ndarray:
        """Return the closest point of the set to ``v``."""

    def contains(self, v: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        v = np.asarray(v, dtype=float)
        gap = np.linalg.norm(self.project(v) - v)
        return bool(gap <= tol * max(1.0, float(np.linalg.norm(v))))

    def _as_vector(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        if v.size != self.dim:
            raise DimensionError(f"Expected a vector of length {self.dim}, got {v.size}")
        return v


class BoxSet(ConvexSet):
    """Componentwise bounds ``lower <= z <= upper`` (infinite bounds allowed)."""

    kind = "box"

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=float).ravel()
        upper = np.asarray(upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise DimensionError(f"Box bounds differ in length: {lower.size} vs {upper.size}")
        if np.any(lower > upper):
            raise ConfigError("Box lower bound exceeds upper bound")
        super().__init__(lower.size)
        self.lower = lower
        self.upper = upper

    @classmethod
    def uniform(cls, dim: int, lower: float, upper: float) -> "BoxSet":
        return cls(np.full(dim, lower), np.full(dim, upper))

    @classmethod
    def unbounded(cls, dim: int) -> "BoxSet":
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    @property
    def is_everything(self) -> bool:
        return bool(np.all(self.lower == -np.inf) and np.all(self.upper == np.inf))

    def project(self, v: np.ndarray) -> np.ndarray:
        return np.clip(self._as_vector(v), self.lower, self.upper)

    def contains(self, v: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        v = self._as_vector(v)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def support(self, y: np.ndarray) -> float:
        """sup over the box of yᵀz (may be +inf)."""
        y = self._as_vector(y)
        with np.errstate(invalid="ignore"):
            terms = np.where(y > 0, y * self.upper, np.where(y < 0, y * self.lower, 0.0))
        return float(np.sum(terms))

    def radius(self) -> float:
        """Largest Euclidean norm of a point in the box."""
        return float(np.sqrt(np.sum(np.maximum(self.lower ** 2, self.upper ** 2))))


class AffineSet(ConvexSet):
    """Solution set of ``G z = d``."""

    kind = "affine"

    def __init__(self, G, d):
        G = np.atleast_2d(np.asarray(G, dtype=float))
        d = np.asarray(d, dtype=float).ravel()
        if G.shape[0] != d.size:
            raise DimensionError(f"Affine set has {G.shape[0]} rows but {d.size} right-hand sides")
        super().__init__(G.shape[1])
        self.G = G
        self.d = d
        self._pinv = np.linalg.pinv(G)
        residual = np.linalg.norm(G @ (self._pinv @ d) - d)
        if residual > 1e-9 * max(1.0, float(np.linalg.norm(d))):
            raise ConfigError("Affine set is empty (G z = d is inconsistent)")

    def project(self, v: np.ndarray) -> np.ndarray:
        v = self._as_vector(v)
        return v - self._pinv @ (self.G @ v - self.d)


class OracleSet(ConvexSet):
    """Set known only through a user-supplied projection."""

    kind = "oracle"

    def __init__(self, dim: int, projector: Callable[[np.ndarray], np.ndarray], name: str = "oracle"):
        super().__init__(dim)
        self._projector = projector
        self.name = name

    def project(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(self._projector(self._as_vector(v)), dtype=float)
