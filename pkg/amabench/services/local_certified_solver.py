"""Warm-started projected-gradient local solves with an online iteration certificate.

At outer iteration k agent i runs J_k projected-gradient steps from its
previous solution. J_k is chosen so that the local error stays below a
prescribed decrease function α^k, using only local data: the contraction
factor of the inner method, the Lipschitz constant of λ ↦ z⋆(λ), and the
change β^k of its multiplier since the previous solve.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import eigvalsh

from amabench.config import get_settings
from amabench.errors import ConfigError, InfeasibleIterateError, StepSizeError, ToleranceNotReachedError
from amabench.models import AgentProblem, CertRecord, DecreaseFunction, NetworkInstance

from .distributed_solver import LocalSolution

logger = logging.getLogger(__name__)

EXACT_ITERATION_CAP = 100_000
LOG_ROUNDING_SLACK = 1e-12


def local_pg(agent: AgentProblem, lambda_i: np.ndarray, warm: np.ndarray, J: int, tau_i: float) -> np.ndarray:
    """J projected-gradient steps z ← Proj_C(z − τ(∇f_i(z) − λ_i)) from ``warm``."""
    if not 0 < tau_i < 1.0 / agent.lipschitz:
        raise StepSizeError(f"Local step {tau_i:g} violates tau_i < 1/L_i = {1.0 / agent.lipschitz:g}")
    if J < 0:
        raise ConfigError(f"Iteration count must be nonnegative, got {J}")
    z = np.asarray(warm, dtype=float)
    if not agent.constraint.contains(z):
        raise InfeasibleIterateError(f"Warm start for agent {agent.index} lies outside its constraint set")
    H, h, box = agent.H, agent.h, agent.constraint
    for _ in range(J):
        z = box.project(z - tau_i * (H @ z + h - lambda_i))
    return z


def certify_iterations(alpha_k: float, alpha_prev: float, beta_k: float, gamma_i: float, Lz_i: float) -> int:
    """Smallest J with (1−γ)^J (α^{k−1} + L_z β^k) ≤ α^k.

    Returns 0 when α^k already dominates the right-hand side. With γ = 1 a
    single step is exact, so the answer is 1.
    """
    if not 0 < gamma_i <= 1:
        raise ConfigError(f"Contraction gamma must lie in (0, 1], got {gamma_i}")
    if alpha_k <= 0 or alpha_prev <= 0:
        raise ConfigError("Decrease function values must be positive")
    if beta_k < 0 or Lz_i < 0:
        raise ConfigError("beta and the argmin Lipschitz constant must be nonnegative")
    argument = alpha_k / (alpha_prev + Lz_i * beta_k)
    if argument >= 1:
        return 0
    if gamma_i >= 1:
        return 1
    return max(0, math.ceil(math.log(argument) / math.log(1.0 - gamma_i) - LOG_ROUNDING_SLACK))


def lipschitz_of_argmin(H_i: np.ndarray) -> float:
    """1/λ_min(H_i), a Lipschitz constant of λ ↦ argmin_{z ∈ C} ½zᵀHz + hᵀz − λᵀz."""
    lam_min = float(eigvalsh(np.atleast_2d(H_i))[0])
    if lam_min <= 0:
        raise ConfigError(f"H_i must be positive definite (λ_min = {lam_min:.3e})")
    return 1.0 / lam_min


def contraction_factor(H_i: np.ndarray, tau_i: float) -> float:
    """γ with ‖z^{j} − z⋆‖ ≤ (1−γ)‖z^{j−1} − z⋆‖ for projected gradient: 1 − max|1 − τμ|."""
    eigs = eigvalsh(np.atleast_2d(H_i))
    return float(1.0 - max(abs(1.0 - tau_i * eigs[0]), abs(1.0 - tau_i * eigs[-1])))


def exact_min_iterations(agent: AgentProblem, lambda_i: np.ndarray, warm: np.ndarray, alpha_k: float,
                         tau_i: float, z_star: Optional[np.ndarray] = None) -> int:
    """Smallest j with ‖z^j − z⋆‖ ≤ α^k along the projected-gradient path from ``warm``."""
    z_star = agent.minimizer(lambda_i, warm) if z_star is None else z_star
    z = np.asarray(warm, dtype=float)
    H, h, box = agent.H, agent.h, agent.constraint
    for j in range(EXACT_ITERATION_CAP + 1):
        if np.linalg.norm(z - z_star) <= alpha_k:
            return j
        z = box.project(z - tau_i * (H @ z + h - lambda_i))
    raise ToleranceNotReachedError(
        f"Agent {agent.index}: error {alpha_k:g} not reached within {EXACT_ITERATION_CAP} projected-gradient steps"
    )


@dataclass
class CertState:
    """Agent-local certification state."""

    gamma: float
    gamma_eff: float
    Lz: float
    tau: float
    alpha: DecreaseFunction
    warm: np.ndarray
    lam_prev: Optional[np.ndarray] = None
    beta: float = 0.0
    records: list[CertRecord] = field(default_factory=list)

    @classmethod
    def for_agent(cls, agent: AgentProblem, alpha: DecreaseFunction, tau: Optional[float] = None) -> "CertState":
        tau = tau if tau is not None else get_settings().step_fraction / agent.lipschitz
        return cls(
            gamma=agent.sigma / agent.lipschitz,
            gamma_eff=contraction_factor(agent.H, tau),
            Lz=lipschitz_of_argmin(agent.H),
            tau=tau,
            alpha=alpha,
            warm=agent.constraint.project(np.zeros(agent.dim)),
        )


def default_alpha0(instance: NetworkInstance) -> float:
    """max_i ‖Proj_{C_i}(0) − z_i⋆(0)‖, so the first warm start lies within α⁰; 1.0 if that is zero."""
    worst = 0.0
    for agent in instance.agents:
        start = agent.constraint.project(np.zeros(agent.dim))
        worst = max(worst, float(np.linalg.norm(start - agent.minimizer(np.zeros(agent.dim)))))
    return worst if worst > 0 else 1.0


class CertifiedLocalSolver:
    """LocalSolverPort running certified projected-gradient solves."""

    def __init__(self, instance: NetworkInstance, alpha: DecreaseFunction, exact_compare: bool = False):
        if alpha.alpha0 is None:
            alpha = alpha.model_copy(update={"alpha0": default_alpha0(instance)})
            logger.info(f"Using alpha0 = {alpha.alpha0:.6g}")
        self.instance = instance
        self.alpha = alpha
        self.exact_compare = exact_compare
        self.states = [CertState.for_agent(agent, alpha) for agent in instance.agents]

    def solve(self, i, lam_i, k, warm):
        agent, state = self.instance.agents[i], self.states[i]
        lam_i = np.asarray(lam_i, dtype=float)
        state.beta = 0.0 if state.lam_prev is None else float(np.linalg.norm(lam_i - state.lam_prev))
        alpha_k, alpha_prev = state.alpha.value(k), state.alpha.value(k - 1)
        J = certify_iterations(alpha_k, alpha_prev, state.beta, state.gamma_eff, state.Lz)
        z_star = agent.minimizer(lam_i, state.warm)
        J_exact = (exact_min_iterations(agent, lam_i, state.warm, alpha_k, state.tau, z_star)
                   if self.exact_compare else None)
        z = local_pg(agent, lam_i, state.warm, J, state.tau)
        delta = float(np.linalg.norm(z - z_star))
        record = CertRecord(k=k, agent=i, beta_k=state.beta, alpha_k=alpha_k, J_certified=J,
                            J_exact=J_exact, delta_measured=delta, certified_ok=delta <= alpha_k)
        state.records.append(record)
        state.warm = z
        state.lam_prev = lam_i.copy()
        if not record.certified_ok:
            logger.warning(f"Agent {i} at k={k}: local error {delta:.3e} exceeds alpha_k {alpha_k:.3e}")
        return LocalSolution(z, {"delta_norm": delta, "J_certified": J, "J_exact": J_exact,
                                 "beta": state.beta, "alpha": alpha_k})

    @property
    def records(self) -> list[CertRecord]:
        """All certification records ordered by (k, agent)."""
        merged = [r for state in self.states for r in state.records]
        return sorted(merged, key=lambda r: (r.k, r.agent))
