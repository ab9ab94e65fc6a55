"""Agent graph, neighborhood selection maps and per-agent local problems."""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from amabench.errors import ConfigError, DimensionError, DisconnectedGraphError

from .problem import QuadraticFn
from .sets import BoxSet

logger = logging.getLogger(__name__)


class Network:
    """Fixed undirected graph over M agents; N_i always contains i."""

    def __init__(self, M: int, edges: Iterable[Sequence[int]]):
        if M < 1:
            raise ConfigError(f"Network needs at least one agent, got M={M}")
        self.M = int(M)
        sets = [{i} for i in range(self.M)]
        for edge in edges:
            i, j = (int(e) for e in edge)
            if not (0 <= i < self.M and 0 <= j < self.M):
                raise ConfigError(f"Edge ({i}, {j}) references an agent outside 0..{self.M - 1}")
            sets[i].add(j)
            sets[j].add(i)
        self.neighbors: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(s)) for s in sets)

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.M) for j in self.neighbors[i] if i < j]

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        rows = [i for i in range(self.M) for _ in self.neighbors[i]]
        cols = [j for i in range(self.M) for j in self.neighbors[i]]
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.M, self.M))

    @property
    def is_connected(self) -> bool:
        n_components, _ = connected_components(self.adjacency, directed=False)
        return n_components == 1

    def require_connected(self) -> None:
        if not self.is_connected:
            raise DisconnectedGraphError(f"Agent graph with {self.M} agents is not connected")

    def degree(self, i: int) -> int:
        """|N_i|, counting i itself."""
        return len(self.neighbors[i])


class SelectionMap:
    """Selection matrices E_i (z_i = E_i v) and the F_ji selectors between copies.

    z_i stacks the blocks [v]_j of every j in N_i in ascending agent order.
    """

    def __init__(self, network: Network, block_sizes: Sequence[int]):
        if len(block_sizes) != network.M:
            raise DimensionError(f"Got {len(block_sizes)} block sizes for {network.M} agents")
        self.network = network
        self.block_sizes = tuple(int(s) for s in block_sizes)
        offsets = np.concatenate([[0], np.cumsum(self.block_sizes)])
        self.global_slices = tuple(slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:]))
        self.n_v = int(offsets[-1])

        self._local: list[dict[int, slice]] = []
        for i in range(network.M):
            layout, start = {}, 0
            for j in network.neighbors[i]:
                layout[j] = slice(start, start + self.block_sizes[j])
                start += self.block_sizes[j]
            self._local.append(layout)

    @property
    def M(self) -> int:
        return self.network.M

    def local_dim(self, i: int) -> int:
        return sum(self.block_sizes[j] for j in self.network.neighbors[i])

    def local_slice(self, i: int, j: int) -> slice:
        """Position of [v]_j inside z_i (the selector F_ij)."""
        try:
            return self._local[i][j]
        except KeyError:
            raise ConfigError(f"Agent {j} is not a neighbor of agent {i}") from None

    @cached_property
    def local_offsets(self) -> tuple[slice, ...]:
        """Slices of each z_i inside the stacked vector z = (z_1, ..., z_M)."""
        sizes = [self.local_dim(i) for i in range(self.M)]
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        return tuple(slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]))

    @property
    def n_z(self) -> int:
        return self.local_offsets[-1].stop

    def E(self, i: int) -> sp.csr_matrix:
        rows, cols = [], []
        for j in self.network.neighbors[i]:
            local, glob = self.local_slice(i, j), self.global_slices[j]
            rows.extend(range(local.start, local.stop))
            cols.extend(range(glob.start, glob.stop))
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.local_dim(i), self.n_v))

    @cached_property
    def E_stacked(self) -> sp.csr_matrix:
        """E = [E_1; ...; E_M]."""
        return sp.vstack([self.E(i) for i in range(self.M)], format="csr")

    def multiplicity(self) -> np.ndarray:
        """Diagonal of EᵀE: each entry of [v]_i appears |N_i| times."""
        return np.concatenate([
            np.full(self.block_sizes[i], self.network.degree(i), dtype=float) for i in range(self.M)
        ])

    def gather(self, i: int, v: np.ndarray) -> np.ndarray:
        """E_i v."""
        return np.concatenate([v[self.global_slices[j]] for j in self.network.neighbors[i]])

    def scatter(self, local: Sequence[np.ndarray]) -> np.ndarray:
        """Σ_i E_iᵀ local_i, summed in ascending agent order."""
        out = np.zeros(self.n_v)
        for i in range(self.M):
            for j in self.network.neighbors[i]:
                out[self.global_slices[j]] += local[i][self.local_slice(i, j)]
        return out

    def split_stacked(self, z: np.ndarray) -> list[np.ndarray]:
        return [z[sl] for sl in self.local_offsets]

    def check_consistency(self) -> None:
        """Assert F_ji E_j v = [v]_i for a random v and every j in N_i."""
        v = np.random.default_rng(0).standard_normal(self.n_v)
        for i in range(self.M):
            for j in self.network.neighbors[i]:
                copy = self.gather(j, v)[self.local_slice(j, i)]
                if not np.array_equal(copy, v[self.global_slices[i]]):
                    raise ConfigError(f"Selector F_{j}{i} does not recover block {i}")


@dataclass
class AgentProblem:
    """Local problem of agent i: minimize f_i(z_i) over z_i in C_i."""

    index: int
    objective: QuadraticFn
    constraint: BoxSet

    def __post_init__(self):
        if self.objective.dim != self.constraint.dim:
            raise DimensionError(
                f"Agent {self.index}: objective acts on R^{self.objective.dim}, "
                f"constraint set on R^{self.constraint.dim}"
            )

    @property
    def dim(self) -> int:
        return self.objective.dim

    @property
    def H(self) -> np.ndarray:
        return self.objective.H

    @property
    def h(self) -> np.ndarray:
        return self.objective.h

    @property
    def sigma(self) -> float:
        return self.objective.sigma

    @property
    def lipschitz(self) -> float:
        return self.objective.lipschitz

    @cached_property
    def constrained_objective(self) -> QuadraticFn:
        """f_i + indicator of C_i as a single objective."""
        return self.objective.with_domain(self.constraint)

    def minimizer(self, lam: np.ndarray, warm: Optional[np.ndarray] = None) -> np.ndarray:
        """z_i⋆(λ_i) = argmin_{z ∈ C_i} f_i(z) − λ_iᵀz."""
        return self.constrained_objective.linear_argmin(lam, warm)


@dataclass
class NetworkInstance:
    """Everything a distributed run needs: graph, selectors, agents and the global input box."""

    network: Network
    maps: SelectionMap
    agents: list[AgentProblem]
    global_box: BoxSet
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.agents) != self.network.M:
            raise DimensionError(f"Got {len(self.agents)} agents for a network of {self.network.M}")
        for agent in self.agents:
            if agent.dim != self.maps.local_dim(agent.index):
                raise DimensionError(
                    f"Agent {agent.index} has dimension {agent.dim}, "
                    f"selector expects {self.maps.local_dim(agent.index)}"
                )
        if self.global_box.dim != self.maps.n_v:
            raise DimensionError(f"Global box has dimension {self.global_box.dim}, expected {self.maps.n_v}")

    @property
    def M(self) -> int:
        return self.network.M

    def local_box(self, i: int) -> BoxSet:
        idx = np.concatenate([
            np.arange(self.maps.global_slices[j].start, self.maps.global_slices[j].stop)
            for j in self.network.neighbors[i]
        ])
        return BoxSet(self.global_box.lower[idx], self.global_box.upper[idx])

    @property
    def sigma_min(self) -> float:
        return min(a.sigma for a in self.agents)

    def summary(self) -> dict:
        sigmas = [a.sigma for a in self.agents]
        lips = [a.lipschitz for a in self.agents]
        return {
            "M": self.M,
            "n_v": self.maps.n_v,
            "n_z": self.maps.n_z,
            "edges": len(self.network.edges),
            "lambda_min": min(sigmas),
            "lambda_max": max(lips),
            "gamma_min": min(s / l for s, l in zip(sigmas, lips)),
        }
