"""Distributed inexact AMA/FAMA over an agent graph.

Each iteration: agent-parallel local solves, a neighbor exchange of local
copies, per-block consensus averaging, a second exchange of consensus blocks,
and local multiplier updates. Agents only ever read data published by their
neighbors; the exchange enforces this.
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Protocol, Sequence

import numpy as np
import scipy.sparse as sp

from amabench.config import get_settings
from amabench.errors import CommunicationError, ConfigError, InfeasibleIterateError, StepSizeError
from amabench.models import (
    AgentProblem,
    AmaTrace,
    ErrorSchedule,
    Network,
    NetworkInstance,
    SelectionMap,
    SeparableSum,
    SplitProblem,
    ZeroFunction,
)

from .ama_bounds import ama_dual_bound, fama_bound
from .inexact_pgm import contraction_sum, momentum_weight
from .perturbation import ErrorInjector
from .splitting_core import dual_value

logger = logging.getLogger(__name__)

DISTRIBUTED_VARIANTS = ("cor6", "cor7", "cor7_thm2", "cor8", "cor8_nom")


def build_split(agents: Sequence[AgentProblem], network: Network, maps: SelectionMap) -> SplitProblem:
    """min Σ f_i(z_i) + ι_{C_i}(z_i) s.t. z − Ev = 0, i.e. A = I, B = −E, c = 0, g ≡ 0."""
    network.require_connected()
    maps.check_consistency()
    if len(agents) != network.M:
        raise ConfigError(f"Got {len(agents)} agents for a network of {network.M}")
    for agent in agents:
        if agent.dim != maps.local_dim(agent.index):
            raise ConfigError(f"Agent {agent.index} dimension {agent.dim} disagrees with its selector")
    f = SeparableSum([agent.constrained_objective for agent in agents])
    n_z = maps.n_z
    return SplitProblem(
        f=f,
        g=ZeroFunction(maps.n_v),
        A=sp.identity(n_z, format="csr"),
        B=-maps.E_stacked,
        c=np.zeros(n_z),
    )


def consensus(ztilde: Sequence[np.ndarray], maps: SelectionMap) -> np.ndarray:
    """[v]_j = mean of the copies [z̃_i]_j over i in N_j, summed in ascending i."""
    v = np.zeros(maps.n_v)
    for j in range(maps.M):
        block = v[maps.global_slices[j]]
        holders = maps.network.neighbors[j]
        for i in holders:
            block += ztilde[i][maps.local_slice(i, j)]
        block /= len(holders)
    return v


def check_null_multiplier(lambda_all, maps: SelectionMap) -> float:
    """‖Σ_i E_iᵀλ_i‖∞ (per-agent list or stacked vector)."""
    if isinstance(lambda_all, np.ndarray) and lambda_all.ndim == 1 and lambda_all.size == maps.n_z:
        lambda_all = maps.split_stacked(lambda_all)
    return float(np.max(np.abs(maps.scatter(lambda_all)), initial=0.0))


class NeighborExchange:
    """Per-iteration mailbox; reads are only allowed along graph edges."""

    def __init__(self, network: Network, record: bool = False):
        self.network = network
        self._boxes: dict[tuple[int, str], Any] = {}
        self.record = record
        self.reads: list[tuple[int, int, str]] = []
        self._lock = threading.Lock()

    def publish(self, owner: int, key: str, value) -> None:
        with self._lock:
            self._boxes[(owner, key)] = value

    def read(self, reader: int, owner: int, key: str):
        if owner not in self.network.neighbors[reader]:
            raise CommunicationError(f"Agent {reader} attempted to read '{key}' from non-neighbor {owner}")
        with self._lock:
            if self.record:
                self.reads.append((reader, owner, key))
            return self._boxes[(owner, key)]

    def clear(self) -> None:
        with self._lock:
            self._boxes.clear()


@dataclass
class LocalSolution:
    """Local solve result: the (inexact) point and what the solver reports about it."""

    z: np.ndarray
    info: dict = field(default_factory=dict)


class LocalSolverPort(Protocol):
    """Solves argmin_{z ∈ C_i} f_i(z) − λ_iᵀz, possibly inexactly, always returning a point of C_i."""

    def solve(self, i: int, lam_i: np.ndarray, k: int, warm: Optional[np.ndarray]) -> LocalSolution:
        ...


class ExactLocalSolver:
    """High-accuracy local solves."""

    def __init__(self, instance: NetworkInstance):
        self.instance = instance

    def solve(self, i, lam_i, k, warm):
        z = self.instance.agents[i].minimizer(lam_i, warm)
        return LocalSolution(z, {"delta_norm": 0.0})


class PerturbedLocalSolver:
    """Exact solve plus a synthetic error, re-projected onto C_i.

    One global error vector with ‖δ^k‖ = schedule(k) is drawn per iteration and
    split into agent blocks, so the realizations match a centralized run on the
    same seed.
    """

    def __init__(self, instance: NetworkInstance, delta_sched: ErrorSchedule, seed: int):
        self.instance = instance
        self.delta_sched = delta_sched
        self.seed = seed
        self._injector = ErrorInjector(seed)
        self._drawn: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def _global_delta(self, k: int) -> np.ndarray:
        with self._lock:
            if k not in self._drawn:
                self._drawn = {k: self._injector.delta(self.instance.maps.n_z, self.delta_sched.magnitude(k))}
            return self._drawn[k]

    def solve(self, i, lam_i, k, warm):
        agent = self.instance.agents[i]
        z_star = agent.minimizer(lam_i, warm)
        block = self._global_delta(k)[self.instance.maps.local_offsets[i]]
        z = agent.constraint.project(z_star + block)
        return LocalSolution(z, {"delta_norm": float(np.linalg.norm(z - z_star))})


def default_distributed_step(instance: NetworkInstance) -> float:
    return get_settings().step_fraction * instance.sigma_min


def _run_distributed(instance: NetworkInstance, local: LocalSolverPort, tau: float, K: int,
                     momentum: bool, threads: int, record_dual: bool,
                     exchange: Optional[NeighborExchange]) -> AmaTrace:
    if not 0 < tau < instance.sigma_min:
        raise StepSizeError(f"Step size {tau:g} violates tau < min_i sigma_i = {instance.sigma_min:g}")
    if K < 0:
        raise ConfigError(f"Iteration count must be nonnegative, got {K}")
    maps, network, M = instance.maps, instance.network, instance.M
    split = build_split(instance.agents, network, maps) if record_dual else None
    exchange = exchange if exchange is not None else NeighborExchange(network)
    algorithm = "dist-fama" if momentum else "dist-ama"

    lam = [np.zeros(maps.local_dim(i)) for i in range(M)]
    lam_hat = [l.copy() for l in lam]
    warm: list[Optional[np.ndarray]] = [None] * M
    running = np.zeros(maps.n_z)
    trace = AmaTrace(algorithm=algorithm, tau=tau, seed=getattr(local, "seed", 0), lam0=np.zeros(maps.n_z))
    logger.info(f"Running {algorithm} on {M} agents for {K} iterations (tau={tau:.4g}, threads={threads})")

    def local_step(i: int, k: int) -> LocalSolution:
        solution = local.solve(i, lam_hat[i], k, warm[i])
        if not instance.agents[i].constraint.contains(solution.z):
            raise InfeasibleIterateError(f"Local solver returned an infeasible point for agent {i} at k={k}")
        return solution

    def consensus_block(j: int) -> np.ndarray:
        holders = network.neighbors[j]
        total = np.zeros(maps.block_sizes[j])
        for i in holders:
            total += exchange.read(j, i, "z")[maps.local_slice(i, j)]
        return total / len(holders)

    def multiplier_step(i: int) -> tuple[np.ndarray, np.ndarray]:
        Ev = np.concatenate([exchange.read(i, j, "v") for j in network.neighbors[i]])
        return Ev, lam_hat[i] + tau * (Ev - z_tilde[i])

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for k in range(1, K + 1):
            solutions = list(pool.map(lambda i: local_step(i, k), range(M)))
            z_tilde = [s.z for s in solutions]
            exchange.clear()
            for i in range(M):
                exchange.publish(i, "z", z_tilde[i])
            v_blocks = [consensus_block(j) for j in range(M)]
            for j in range(M):
                exchange.publish(j, "v", v_blocks[j])
            updates = [multiplier_step(i) for i in range(M)]
            lam_new = [lam_i for _, lam_i in updates]
            if momentum:
                lam_hat = [ln + momentum_weight(k) * (ln - lo) for ln, lo in zip(lam_new, lam)]
            else:
                lam_hat = lam_new
            lam = lam_new
            warm = z_tilde

            lam_stacked = np.concatenate(lam)
            delta_norm = float(np.sqrt(sum(s.info.get("delta_norm", 0.0) ** 2 for s in solutions)))
            trace.x.append(np.concatenate(z_tilde))
            trace.z.append(np.concatenate(v_blocks))
            trace.u.append(trace.z[-1])
            trace.lam.append(lam_stacked)
            trace.lam_hat.append(np.concatenate(lam_hat))
            trace.delta_norms.append(delta_norm)
            trace.theta_norms.append(0.0)
            trace.A_delta_norms.append(delta_norm)
            trace.B_theta_norms.append(0.0)
            trace.z_feasible.append(True)
            trace.ET_lambda_inf.append(check_null_multiplier(lam, maps))
            if "J_certified" in solutions[0].info:
                trace.J_certified.append([s.info["J_certified"] for s in solutions])
            if solutions[0].info.get("J_exact") is not None:
                trace.J_exact.append([s.info["J_exact"] for s in solutions])
            if record_dual:
                running += lam_stacked
                trace.dual_values.append(dual_value(split, lam_stacked))
                trace.dual_values_avg.append(dual_value(split, running / k))
            if k % 50 == 0:
                logger.debug(f"{algorithm} k={k}: |E^T lambda|_inf={trace.ET_lambda_inf[-1]:.2e}")
    return trace


def run_distributed_iama(instance: NetworkInstance, local: LocalSolverPort, tau: float, K: int,
                         threads: int = 1, record_dual: bool = True,
                         exchange: Optional[NeighborExchange] = None) -> AmaTrace:
    """Distributed inexact AMA with λ_i^0 = 0."""
    return _run_distributed(instance, local, tau, K, False, threads, record_dual, exchange)


def run_distributed_ifama(instance: NetworkInstance, local: LocalSolverPort, tau: float, K: int,
                          threads: int = 1, record_dual: bool = True,
                          exchange: Optional[NeighborExchange] = None) -> AmaTrace:
    """Distributed inexact FAMA: per-agent momentum on the multipliers."""
    return _run_distributed(instance, local, tau, K, True, threads, record_dual, exchange)


@dataclass(frozen=True)
class DistributedConstants:
    """Instance constants the distributed bounds need."""

    L: float
    dist0: float
    gamma: float
    M: int

    @classmethod
    def from_instance(cls, instance: NetworkInstance, dist0: float, tau: Optional[float] = None):
        """L = 1/σ_f; γ = λ_min(H)/λ_max(H), or τ/λ_max(H) when a step is given."""
        lo = min(agent.sigma for agent in instance.agents)
        hi = max(agent.lipschitz for agent in instance.agents)
        gamma = lo / hi if tau is None else min(1.0, tau / hi)
        return cls(L=1.0 / lo, dist0=dist0, gamma=gamma, M=instance.M)


def distributed_bound(k: int, variant: str, constants: DistributedConstants,
                      delta_norms: Sequence[float]) -> float:
    """Distributed-split bounds evaluated on measured ‖δ^p‖ (θ ≡ 0, L(ψ) = 0).

    ``cor7`` keeps the printed (1−γ)^{k+1} exponent with δ⁰ = 0; ``cor7_thm2``
    is the same bound with the (1−γ)^k exponent of the general linear rate.
    ``cor8_nom`` drops the factor M.
    """
    if variant not in DISTRIBUTED_VARIANTS:
        raise ConfigError(f"Unknown distributed bound '{variant}', expected one of {DISTRIBUTED_VARIANTS}")
    if k < 1 or len(delta_norms) < k:
        raise ConfigError(f"Need k >= 1 and at least k error norms (k={k}, got {len(delta_norms)})")
    L, d0 = constants.L, constants.dist0
    delta = np.asarray(delta_norms[:k], dtype=float)
    if variant == "cor6":
        return L / (2.0 * k) * (d0 + 2.0 * float(np.sum(delta)) / L) ** 2
    if variant in ("cor8", "cor8_nom"):
        factor = constants.M if variant == "cor8" else 1
        p = np.arange(1, k + 1, dtype=float)
        return 2.0 * L / (k + 1.0) ** 2 * (d0 + 2.0 * factor * float(np.sum(p * delta)) / L) ** 2
    rate = 1.0 - constants.gamma
    tail = contraction_sum(k, constants.gamma, 0.0, delta / L)
    exponent = k + 1 if variant == "cor7" else k
    return rate ** exponent * d0 + tail


def distributed_bound_columns(algorithm: str, k: int, printed: DistributedConstants,
                              stepped: DistributedConstants, tau: float,
                              delta_norms: Sequence[float]) -> dict:
    """Bound cells of row k for a distributed trace, from measured ‖δ^p‖.

    ``printed`` carries γ = λ_min/λ_max, ``stepped`` the step-aware γ = τ/λ_max(H).
    """
    a, zeros, d0 = delta_norms, [0.0] * k, printed.dist0
    if algorithm == "dist-ama":
        return {
            "bound_thm1": ama_dual_bound(k, printed.L, d0, 1.0, 1.0, tau, 0.0, a, zeros, mapped_norms=True),
            "bound_cor6": distributed_bound(k, "cor6", printed, a),
            "bound_cor7": distributed_bound(k, "cor7", printed, a),
            "bound_cor7_thm2": distributed_bound(k, "cor7_thm2", stepped, a),
        }
    return {
        "bound_thm4": fama_bound(k, printed.L, d0, 1.0, 1.0, tau, 0.0, a, zeros, mapped_norms=True),
        "bound_cor8": distributed_bound(k, "cor8", printed, a),
        "bound_cor8_nom": distributed_bound(k, "cor8_nom", printed, a),
    }


def distributed_trace_rows(instance: NetworkInstance, trace: AmaTrace, lam_star: np.ndarray, dual_star: float,
                           u_star: Optional[np.ndarray] = None) -> list[dict]:
    """CSV rows (distributed columns) with the bounds that apply to the trace's algorithm."""
    dist0 = float(np.linalg.norm(trace.lam0 - lam_star))
    printed = DistributedConstants.from_instance(instance, dist0)
    stepped = DistributedConstants.from_instance(instance, dist0, tau=trace.tau)
    rows = []
    for k in range(1, trace.K + 1):
        row = {
            "k": k,
            "dual_gap_last": dual_star - trace.dual_values[k - 1] if trace.dual_values else None,
            "dual_gap_avg": dual_star - trace.dual_values_avg[k - 1] if trace.dual_values_avg else None,
            "dist_lambda": float(np.linalg.norm(trace.lam[k - 1] - lam_star)),
            "delta_norm": trace.delta_norms[k - 1],
            "theta_norm": 0.0,
            "A_delta_norm": trace.A_delta_norms[k - 1],
            "B_theta_norm": 0.0,
            "ET_lambda_inf": trace.ET_lambda_inf[k - 1],
        }
        if u_star is not None and trace.u:
            row["u_err"] = float(np.linalg.norm(trace.u[k - 1] - u_star))
        row.update(distributed_bound_columns(trace.algorithm, k, printed, stepped, trace.tau,
                                             trace.A_delta_norms))
        if trace.J_certified:
            J = trace.J_certified[k - 1]
            row.update(J_mean=float(np.mean(J)), J_min=int(min(J)), J_max=int(max(J)))
        if trace.J_exact:
            J = trace.J_exact[k - 1]
            row.update(J_exact_mean=float(np.mean(J)), J_exact_max=int(max(J)))
        rows.append(row)
    return rows
