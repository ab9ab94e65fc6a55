"""Seeded synthetic error injection.

Each error stream (gradient/x-step, z-step, prox) has its own generator spawned
from one seed, so changing one schedule never shifts the draws of another.
A zero magnitude consumes no random numbers.
"""

import numpy as np

STREAMS = ("delta", "theta", "prox")


class ErrorInjector:
    """Draws error vectors of prescribed norm in uniformly random directions."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        children = np.random.SeedSequence(self.seed).spawn(len(STREAMS))
        self._rngs = {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}

    def rng(self, stream: str) -> np.random.Generator:
        return self._rngs[stream]

    def direction(self, stream: str, dim: int) -> np.ndarray:
        """Uniform sample from the unit sphere in R^dim."""
        d = self._rngs[stream].standard_normal(dim)
        norm = np.linalg.norm(d)
        while norm == 0.0:
            d = self._rngs[stream].standard_normal(dim)
            norm = np.linalg.norm(d)
        return d / norm

    def draw(self, stream: str, dim: int, magnitude: float) -> np.ndarray:
        if magnitude == 0.0 or dim == 0:
            return np.zeros(dim)
        return magnitude * self.direction(stream, dim)

    def delta(self, dim: int, magnitude: float) -> np.ndarray:
        return self.draw("delta", dim, magnitude)

    def theta(self, dim: int, magnitude: float) -> np.ndarray:
        return self.draw("theta", dim, magnitude)
