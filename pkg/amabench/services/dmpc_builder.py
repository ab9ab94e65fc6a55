"""Distributed MPC instances: condensation of input-coupled LTI agents and a random generator.

Agent i evolves as x_i(t+1) = A_ii x_i(t) + Σ_{j ∈ N_i} B_ij u_j(t). Eliminating
the states over the horizon leaves a QP in the neighborhood input sequences
z_i = (u_j)_{j ∈ N_i}, each u_j stacked time-major u_j(0), ..., u_j(N−1).
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import block_diag

from amabench.errors import ConfigError, ResamplingBudgetError
from amabench.models import (
    AgentProblem,
    BoxSet,
    GeneratorParams,
    InstanceFile,
    MpcRecord,
    Network,
    NetworkInstance,
    QuadraticFn,
    SelectionMap,
    record_from_instance,
    solve_box_qp,
)

logger = logging.getLogger(__name__)

RIDGE = 1e-8
RIDGE_TRIGGER = 1e-10
ACTIVE_TOL = 1e-9
SCALE_DOUBLINGS = 40
SCALE_BISECTIONS = 30


@dataclass
class LtiAgent:
    """Dynamics and input box of one agent.

    ``B`` maps each neighbor j (including i) to B_ij. ``A_coupling`` holds
    state couplings A_ij, j ≠ i, which condensation requires to be zero.
    """

    A: np.ndarray
    B: dict[int, np.ndarray]
    x0: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    A_coupling: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.lower.size

    def is_controllable(self, own: int) -> bool:
        """Rank test on [B, AB, ..., A^{n−1}B] for the pair (A_ii, B_ii)."""
        return controllable(self.A, self.B[own])


@dataclass
class MpcSpec:
    """Horizon and stage/terminal weights."""

    N: int
    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError(f"Horizon must be at least 1, got N={self.N}")
        for name in ("Q", "R", "P"):
            matrix = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if np.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0] <= 0:
                raise ConfigError(f"{name} must be positive definite")
            setattr(self, name, matrix)

    @classmethod
    def identity(cls, N: int, n_x: int, n_u: int) -> "MpcSpec":
        return cls(N, np.eye(n_x), np.eye(n_u), np.eye(n_x))

    @property
    def Q_bar(self) -> np.ndarray:
        """blockdiag(Q, ..., Q, P) acting on (x(1), ..., x(N))."""
        return block_diag(*([self.Q] * (self.N - 1) + [self.P]))


@dataclass
class CondensedMpc:
    """Output of ``condense``: local QPs, selectors and the global input box."""

    agents: list[AgentProblem]
    maps: SelectionMap
    global_box: BoxSet
    ridge_agents: list[int] = field(default_factory=list)

    def instance(self, metadata: Optional[dict] = None) -> NetworkInstance:
        return NetworkInstance(self.maps.network, self.maps, self.agents, self.global_box, metadata or {})


def controllable(A: np.ndarray, B: np.ndarray) -> bool:
    n = A.shape[0]
    blocks, power = [], np.eye(n)
    for _ in range(n):
        blocks.append(power @ B)
        power = A @ power
    return int(np.linalg.matrix_rank(np.hstack(blocks))) == n


def prediction_matrices(A: np.ndarray, B_blocks: Sequence[np.ndarray], N: int) -> tuple[np.ndarray, np.ndarray]:
    """Φ, Γ with (x(1), ..., x(N)) = Φ x(0) + Γ z.

    Columns of Γ follow z: one N·n_u block per entry of ``B_blocks``, time-major.
    """
    n_x = A.shape[0]
    powers = [np.eye(n_x)]
    for _ in range(N):
        powers.append(A @ powers[-1])
    Phi = np.vstack(powers[1:])
    widths = [B.shape[1] for B in B_blocks]
    offsets = np.concatenate([[0], np.cumsum([N * w for w in widths])])
    Gamma = np.zeros((N * n_x, int(offsets[-1])))
    for p, B in enumerate(B_blocks):
        n_u = widths[p]
        for t in range(N):
            for s in range(t + 1):
                col = int(offsets[p]) + s * n_u
                Gamma[t * n_x:(t + 1) * n_x, col:col + n_u] = powers[t - s] @ B
    return Phi, Gamma


def _input_weight(spec: MpcSpec, network: Network, i: int, r_placement: str) -> list[np.ndarray]:
    """R̄_i as one block per neighbor of i."""
    blocks = []
    for j in network.neighbors[i]:
        if r_placement == "neighborhood":
            weight = 1.0
        elif r_placement == "shared":
            weight = 1.0 / network.degree(j)
        elif r_placement == "own":
            weight = 1.0 if j == i else 0.0
        else:
            raise ConfigError(f"Unknown input-cost placement '{r_placement}'")
        blocks.append(np.kron(np.eye(spec.N), weight * spec.R))
    return blocks


def condense(
    systems: Sequence[LtiAgent],
    spec: MpcSpec,
    network: Network,
    r_placement: str = "own",
) -> CondensedMpc:
    """Eliminate the states and build f_i(z_i) = ½z_iᵀH_iz_i + h_iᵀz_i + const.

    H_i = Γ_iᵀQ̄Γ_i + R̄_i, h_i = Γ_iᵀQ̄Φ_ix̄_i and the constant collects the
    state cost of x̄_i and of the free response, so Σ_i f_i(E_i v) is the
    forward-simulated cost of v.
    """
    if len(systems) != network.M:
        raise ConfigError(f"Got {len(systems)} systems for a network of {network.M} agents")
    Q_bar = spec.Q_bar
    block_sizes = [spec.N * system.n_u for system in systems]
    maps = SelectionMap(network, block_sizes)

    agents, ridge_agents = [], []
    for i, system in enumerate(systems):
        if any(np.any(A_ij != 0) for A_ij in system.A_coupling.values()):
            raise ConfigError(f"Agent {i} has state coupling; only input coupling can be condensed")
        if not system.is_controllable(i):
            raise ConfigError(f"Agent {i}: (A_ii, B_ii) is not controllable")
        missing = set(network.neighbors[i]) - set(system.B)
        if missing:
            raise ConfigError(f"Agent {i} lacks input matrices for neighbors {sorted(missing)}")

        Phi, Gamma = prediction_matrices(system.A, [system.B[j] for j in network.neighbors[i]], spec.N)
        free = Phi @ system.x0
        H = Gamma.T @ Q_bar @ Gamma + block_diag(*_input_weight(spec, network, i, r_placement))
        H = 0.5 * (H + H.T)
        h = Gamma.T @ Q_bar @ free
        offset = 0.5 * float(system.x0 @ spec.Q @ system.x0) + 0.5 * float(free @ Q_bar @ free)

        if r_placement == "own" and np.linalg.eigvalsh(H)[0] < RIDGE_TRIGGER:
            H = H + RIDGE * np.eye(H.shape[0])
            ridge_agents.append(i)
            logger.warning(f"Agent {i}: added ridge {RIDGE:g} to a singular condensed Hessian")

        box = BoxSet(
            np.concatenate([np.tile(systems[j].lower, spec.N) for j in network.neighbors[i]]),
            np.concatenate([np.tile(systems[j].upper, spec.N) for j in network.neighbors[i]]),
        )
        agents.append(AgentProblem(i, QuadraticFn(H, h, offset), box))

    global_box = BoxSet(
        np.concatenate([np.tile(s.lower, spec.N) for s in systems]),
        np.concatenate([np.tile(s.upper, spec.N) for s in systems]),
    )
    return CondensedMpc(agents, maps, global_box, ridge_agents)


def simulate_cost(
    systems: Sequence[LtiAgent],
    spec: MpcSpec,
    network: Network,
    v: np.ndarray,
    r_placement: str = "own",
) -> float:
    """Network MPC cost of the global input sequence v by forward simulation."""
    n_u = [s.n_u for s in systems]
    offsets = np.concatenate([[0], np.cumsum([spec.N * m for m in n_u])])
    inputs = [np.asarray(v[offsets[j]:offsets[j + 1]]).reshape(spec.N, n_u[j]) for j in range(network.M)]
    total = 0.0
    for i, system in enumerate(systems):
        x = system.x0.copy()
        for t in range(spec.N):
            total += 0.5 * float(x @ spec.Q @ x)
            x = system.A @ x + sum(system.B[j] @ inputs[j][t] for j in network.neighbors[i])
        total += 0.5 * float(x @ spec.P @ x)
    for j in range(network.M):
        copies = {"neighborhood": network.degree(j), "shared": 1, "own": 1}[r_placement]
        total += 0.5 * copies * sum(float(u @ spec.R @ u) for u in inputs[j])
    return total


def global_indices(maps: SelectionMap, i: int) -> np.ndarray:
    """Positions of z_i's entries inside the global vector v."""
    return np.concatenate([
        np.arange(maps.global_slices[j].start, maps.global_slices[j].stop) for j in maps.network.neighbors[i]
    ])


def monolithic_qp(instance: NetworkInstance) -> tuple[np.ndarray, np.ndarray, float]:
    """H = Σ E_iᵀH_iE_i, q = Σ E_iᵀh_i and the summed constant of min Σ_i f_i(E_i v)."""
    n_v = instance.maps.n_v
    H, q, offset = np.zeros((n_v, n_v)), np.zeros(n_v), 0.0
    for agent in instance.agents:
        idx = global_indices(instance.maps, agent.index)
        H[np.ix_(idx, idx)] += agent.H
        q[idx] += agent.h
        offset += agent.objective.offset
    return H, q, offset


def solve_monolithic(instance: NetworkInstance, warm: Optional[np.ndarray] = None) -> tuple[np.ndarray, float]:
    """High-accuracy u⋆ of the network QP over the global input box, and its cost."""
    H, q, offset = monolithic_qp(instance)
    box = instance.global_box
    u = solve_box_qp(H, q, box.lower, box.upper, warm)
    return u, 0.5 * float(u @ H @ u) + float(q @ u) + offset


def active_fraction(u: np.ndarray, box: BoxSet, tol: float = ACTIVE_TOL) -> float:
    """Share of entries of u sitting on a bound."""
    if u.size == 0:
        return 0.0
    at_bound = (np.abs(u - box.lower) <= tol) | (np.abs(u - box.upper) <= tol)
    return float(np.mean(at_bound))


def random_connected_graph(M: int, neighbor_min: int, neighbor_max: int, rng: np.random.Generator) -> Network:
    """Random spanning tree plus extra edges toward a per-agent target neighbor count."""
    cap = min(neighbor_max, M - 1)
    order = rng.permutation(M)
    degree = np.zeros(M, dtype=int)
    edges: set[tuple[int, int]] = set()
    for pos in range(1, M):
        node = int(order[pos])
        earlier = [int(v) for v in order[:pos]]
        open_slots = [v for v in earlier if degree[v] < cap] or earlier
        parent = open_slots[int(rng.integers(len(open_slots)))]
        edges.add((min(node, parent), max(node, parent)))
        degree[node] += 1
        degree[parent] += 1

    target = np.minimum(rng.integers(neighbor_min, neighbor_max + 1, size=M), cap)
    for node in rng.permutation(M):
        node = int(node)
        candidates = [
            int(v) for v in rng.permutation(M)
            if v != node and degree[v] < cap and (min(node, v), max(node, v)) not in edges
        ]
        for other in candidates:
            if degree[node] >= target[node]:
                break
            edges.add((min(node, other), max(node, other)))
            degree[node] += 1
            degree[other] += 1

    network = Network(M, sorted(edges))
    network.require_connected()
    return network


def _random_state_matrix(params: GeneratorParams, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((params.n_x, params.n_x)) * params.state_scale / np.sqrt(params.n_x)
    radius = float(np.max(np.abs(np.linalg.eigvals(A))))
    if radius > params.spectral_cap:
        A *= params.spectral_cap / radius
    return A


def _random_systems(params: GeneratorParams, network: Network, rng: np.random.Generator) -> list[LtiAgent]:
    lower = np.full(params.n_u, params.box_lower)
    upper = np.full(params.n_u, params.box_upper)
    systems = []
    for i in range(network.M):
        for _ in range(params.max_resample):
            A = _random_state_matrix(params, rng)
            B_own = rng.standard_normal((params.n_x, params.n_u)) * params.input_scale
            if controllable(A, B_own):
                break
        else:
            raise ResamplingBudgetError(
                f"Agent {i}: no controllable pair within {params.max_resample} draws"
            )
        B = {j: rng.standard_normal((params.n_x, params.n_u)) * params.input_scale
             for j in network.neighbors[i] if j != i}
        B[i] = B_own
        systems.append(LtiAgent(A, B, rng.standard_normal(params.n_x), lower, upper))
    return systems


def find_activation_scale(instance: NetworkInstance, target: float) -> tuple[float, float]:
    """Scale s of the initial states so that at least ``target`` of u⋆ sits on the bounds.

    The linear term is linear in s, so one monolithic QP at s = 1 is rescaled.
    Doubling brackets the target, then bisection in log-scale narrows it.

    Returns:
        (scale, achieved active fraction)
    """
    H, q, _ = monolithic_qp(instance)
    box = instance.global_box

    def fraction(scale: float) -> float:
        return active_fraction(solve_box_qp(H, scale * q, box.lower, box.upper), box)

    lo, hi = 0.0, 1.0
    achieved = fraction(hi)
    for _ in range(SCALE_DOUBLINGS):
        if achieved >= target:
            break
        lo, hi = hi, 2.0 * hi
        achieved = fraction(hi)
    else:
        logger.warning(f"Activation target {target:.2f} not reached (best {achieved:.2f} at scale {hi:g})")
        return hi, achieved

    if lo > 0:
        for _ in range(SCALE_BISECTIONS):
            mid = float(np.sqrt(lo * hi))
            share = fraction(mid)
            if share >= target:
                hi, achieved = mid, share
            else:
                lo = mid
    return hi, achieved


def generate_random_instance(params: GeneratorParams) -> tuple[NetworkInstance, InstanceFile]:
    """Seeded random distributed-MPC instance (graph, dynamics, initial states, condensed QPs)."""
    rng = np.random.default_rng(params.seed)
    network = random_connected_graph(params.M, params.neighbor_min, params.neighbor_max, rng)
    systems = _random_systems(params, network, rng)
    spec = MpcSpec.identity(params.N, params.n_x, params.n_u)

    scale = params.activation_scale
    if scale is None:
        unscaled = condense(systems, spec, network, params.r_placement).instance()
        scale, achieved = find_activation_scale(unscaled, params.activation_target)
        logger.info(f"Initial-state scale {scale:.4g} activates {achieved:.1%} of the optimal inputs")
    for system in systems:
        system.x0 = scale * system.x0

    condensed = condense(systems, spec, network, params.r_placement)
    mpc = MpcRecord(
        N=params.N,
        n_x=params.n_x,
        n_u=params.n_u,
        A=[s.A.tolist() for s in systems],
        B={f"{i},{j}": B.tolist() for i, s in enumerate(systems) for j, B in sorted(s.B.items())},
        x0=[s.x0.tolist() for s in systems],
        r_placement=params.r_placement,
        ridge_agents=condensed.ridge_agents,
        activation_scale=float(scale),
    )
    instance = condensed.instance({"generator": params, "mpc": mpc})
    logger.info(f"Generated instance: {instance.summary()}")
    return instance, record_from_instance(instance, generator=params, mpc=mpc)


def systems_from_record(record: InstanceFile) -> tuple[Network, list[LtiAgent], MpcSpec]:
    """Rebuild the LTI data of a generated instance."""
    if record.mpc is None or record.generator is None:
        raise ConfigError("Instance file carries no MPC data")
    mpc, params = record.mpc, record.generator
    network = Network(record.M, record.edges)
    lower = np.full(mpc.n_u, params.box_lower)
    upper = np.full(mpc.n_u, params.box_upper)
    systems = []
    for i in range(record.M):
        B = {j: np.array(mpc.B[f"{i},{j}"]) for j in network.neighbors[i]}
        systems.append(LtiAgent(np.array(mpc.A[i]), B, np.array(mpc.x0[i]), lower, upper))
    return network, systems, MpcSpec.identity(mpc.N, mpc.n_x, mpc.n_u)
