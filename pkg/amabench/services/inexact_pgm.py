"""Inexact proximal-gradient method (PGM), its accelerated variant (APGM) and their bounds.

Both solve min_w φ(w) + ψ(w) with φ L-smooth and ψ proximable, tolerating a
gradient error e^k and a prox objective error ε^k at every iteration.
"""

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from amabench.config import get_settings
from amabench.errors import ConfigError, StepSizeError
from amabench.models import ErrorSchedule, Objective, PgmTrace

from .perturbation import ErrorInjector
from .splitting_core import prox_inexact

logger = logging.getLogger(__name__)

GradientError = Callable[[int, np.ndarray], np.ndarray]
ProxStep = Callable[[int, np.ndarray], tuple[np.ndarray, float]]


def momentum_weight(k: int) -> float:
    """(k−1)/(k+2); zero at k = 1."""
    return (k - 1.0) / (k + 2.0)


def default_step(lipschitz: float) -> float:
    """step_fraction / L, the default step strictly inside (0, 1/L)."""
    return get_settings().step_fraction / lipschitz


def check_step_size(tau: float, lipschitz: float) -> None:
    if not tau > 0:
        raise StepSizeError(f"Step size must be positive, got {tau}")
    if lipschitz > 0 and not tau < 1.0 / lipschitz:
        raise StepSizeError(f"Step size {tau:g} violates tau < 1/L = {1.0 / lipschitz:g}")


def _proximal_gradient(
    phi: Objective,
    w0: np.ndarray,
    tau: float,
    K: int,
    gradient_error: GradientError,
    prox_step: ProxStep,
    momentum: bool,
) -> tuple[list[np.ndarray], list[float], list[float]]:
    """Shared PGM/APGM loop.

    Returns:
        (iterates w^1..w^K, gradient error norms, achieved prox errors)
    """
    w_prev = np.asarray(w0, dtype=float).copy()
    v = w_prev.copy()
    iterates, e_norms, eps_vals = [], [], []
    for k in range(1, K + 1):
        e = gradient_error(k, v)
        w, eps = prox_step(k, v - tau * (phi.gradient(v) + e))
        iterates.append(w)
        e_norms.append(float(np.linalg.norm(e)))
        eps_vals.append(float(eps))
        v = w + momentum_weight(k) * (w - w_prev) if momentum else w
        w_prev = w
    return iterates, e_norms, eps_vals


def _run(algorithm: str, phi, psi, w0, tau, K, e_sched, eps_sched, rng_seed, feasible_only) -> PgmTrace:
    check_step_size(tau, phi.lipschitz)
    if K < 0:
        raise ConfigError(f"Iteration count must be nonnegative, got {K}")
    injector = ErrorInjector(rng_seed)
    w0 = np.asarray(w0, dtype=float)

    def gradient_error(k, _v):
        return injector.delta(w0.size, e_sched.magnitude(k))

    def prox_step(k, y):
        result = prox_inexact(psi, y, tau, eps_sched.magnitude(k), feasible_only, injector.rng("prox"))
        return result.point, result.epsilon

    logger.info(f"Running inexact {algorithm.upper()} for {K} iterations (tau={tau:.4g}, seed={rng_seed})")
    iterates, e_norms, eps_vals = _proximal_gradient(
        phi, w0, tau, K, gradient_error, prox_step, momentum=(algorithm == "apgm")
    )
    trace = PgmTrace(algorithm=algorithm, tau=tau, seed=rng_seed, w0=w0, e_norms=e_norms, eps=eps_vals)
    running = np.zeros_like(w0)
    for k, w in enumerate(iterates, start=1):
        running += w
        avg = running / k
        trace.iterates.append(w)
        trace.averages.append(avg)
        trace.objective.append(phi.value(w) + psi.value(w))
        trace.objective_avg.append(phi.value(avg) + psi.value(avg))
    return trace


def run_inexact_pgm(phi: Objective, psi: Objective, w0: np.ndarray, tau: float, K: int,
                    e_sched: ErrorSchedule, eps_sched: ErrorSchedule, rng_seed: int = 0,
                    feasible_only: bool = True) -> PgmTrace:
    """Inexact PGM: w^k = prox_{τψ,ε^k}(w^{k−1} − τ(∇φ(w^{k−1}) + e^k))."""
    return _run("pgm", phi, psi, w0, tau, K, e_sched, eps_sched, rng_seed, feasible_only)


def run_inexact_apgm(phi: Objective, psi: Objective, w0: np.ndarray, tau: float, K: int,
                     e_sched: ErrorSchedule, eps_sched: ErrorSchedule, rng_seed: int = 0,
                     feasible_only: bool = True) -> PgmTrace:
    """Inexact APGM: PGM steps taken from v^{k−1} = w^{k−1} + (k−2)/(k+1)(w^{k−1} − w^{k−2})."""
    return _run("apgm", phi, psi, w0, tau, K, e_sched, eps_sched, rng_seed, feasible_only)


def _prefix(series: Sequence[float], k: int) -> np.ndarray:
    if k < 1:
        raise ConfigError(f"Bounds are defined for k >= 1, got {k}")
    if len(series) < k:
        raise ConfigError(f"Error series has {len(series)} entries, need {k}")
    return np.asarray(series[:k], dtype=float)


def pgm_bound_convex(k: int, L: float, dist0: float, e_norms: Sequence[float], eps_vals: Sequence[float]) -> float:
    """Averaged-iterate objective gap bound of inexact PGM."""
    e, eps = _prefix(e_norms, k), _prefix(eps_vals, k)
    gamma_sum = float(np.sum(e / L + np.sqrt(2.0 * eps / L)))
    lambda_sum = float(np.sum(eps / L))
    return L / (2.0 * k) * (dist0 + 2.0 * gamma_sum + np.sqrt(2.0 * lambda_sum)) ** 2


def apgm_bound(k: int, L: float, dist0: float, e_norms: Sequence[float], eps_vals: Sequence[float]) -> float:
    """Last-iterate objective gap bound of inexact APGM."""
    e, eps = _prefix(e_norms, k), _prefix(eps_vals, k)
    p = np.arange(1, k + 1, dtype=float)
    gamma_sum = float(np.sum(p * (e / L + np.sqrt(2.0 * eps / L))))
    lambda_sum = float(np.sum(p ** 2 * eps / L))
    return 2.0 * L / (k + 1.0) ** 2 * (dist0 + 2.0 * gamma_sum + np.sqrt(2.0 * lambda_sum)) ** 2


def contraction_sum(k: int, gamma: float, dist0: float, terms: np.ndarray) -> float:
    """(1−γ)^k (dist0 + Σ_{p≤k} (1−γ)^{−p} t_p), evaluated as Σ (1−γ)^{k−p} t_p + (1−γ)^k dist0."""
    rate = 1.0 - gamma
    p = np.arange(1, k + 1)
    weights = np.power(rate, (k - p).astype(float))  # 0**0 == 1 keeps the last term when γ = 1
    return float(rate ** k * dist0 + np.sum(weights * terms[:k]))


def pgm_bound_strongly_convex(k: int, L: float, sigma_phi: float, dist0: float, e_norms: Sequence[float],
                              eps_vals: Sequence[float], tau: Optional[float] = None) -> float:
    """Iterate distance bound of inexact PGM when φ is strongly convex.

    γ = σ_φ/L by default; passing ``tau`` uses the step-aware γ = τσ_φ.
    """
    if not 0 < sigma_phi <= L * (1 + 1e-12):
        raise ConfigError(f"Need 0 < sigma_phi <= L, got sigma_phi={sigma_phi}, L={L}")
    gamma = min(1.0, tau * sigma_phi if tau is not None else sigma_phi / L)
    e, eps = _prefix(e_norms, k), _prefix(eps_vals, k)
    return contraction_sum(k, gamma, dist0, e / L + np.sqrt(2.0 / L) * np.sqrt(eps))


def reference_optimum(phi: Objective, psi: Objective, w0: np.ndarray, tau: float, budget: int,
                      tol: Optional[float] = None) -> tuple[np.ndarray, float, int]:
    """High-accuracy w⋆ and Φ⋆ from an exact run stopped early on a tiny step.

    Plain PGM is used when φ is strongly convex (linear rate), APGM otherwise.

    Returns:
        (w⋆, Φ⋆, iterations used)
    """
    tol = tol if tol is not None else get_settings().reference_tol
    momentum = not phi.sigma > 0
    w_prev = np.asarray(w0, dtype=float).copy()
    v = w_prev.copy()
    k = 0
    for k in range(1, budget + 1):
        w = psi.prox(v - tau * phi.gradient(v), tau)
        step = float(np.linalg.norm(w - w_prev))
        v = w + momentum_weight(k) * (w - w_prev) if momentum else w
        w_prev = w
        if step <= tol * max(1.0, float(np.linalg.norm(w))):
            break
    logger.debug(f"Reference run stopped after {k} iterations")
    return w_prev, phi.value(w_prev) + psi.value(w_prev), k


def pgm_bound_columns(algorithm: str, k: int, L: float, dist0: float, e_norms: Sequence[float],
                      eps_vals: Sequence[float], sigma_phi: float = 0.0, tau: Optional[float] = None) -> dict:
    """Bound cells of row k for a PGM/APGM trace, from measured ‖e^p‖ and ε^p."""
    if algorithm != "pgm":
        return {"bound_p2": apgm_bound(k, L, dist0, e_norms, eps_vals)}
    cells = {"bound_p1": pgm_bound_convex(k, L, dist0, e_norms, eps_vals)}
    if sigma_phi > 0:
        cells["bound_p3"] = pgm_bound_strongly_convex(k, L, sigma_phi, dist0, e_norms, eps_vals, tau=tau)
    return cells


def pgm_trace_rows(trace: PgmTrace, w_star: np.ndarray, objective_star: float, L: float,
                   sigma_phi: float = 0.0) -> list[dict]:
    """CSV rows for a PGM/APGM trace with the bounds that apply to its algorithm."""
    dist0 = float(np.linalg.norm(trace.w0 - w_star))
    rows = []
    for k in range(1, trace.K + 1):
        row = {
            "k": k,
            "obj_gap": trace.objective_avg[k - 1] - objective_star,
            "obj_gap_last": trace.objective[k - 1] - objective_star,
            "dist_to_opt": float(np.linalg.norm(trace.iterates[k - 1] - w_star)),
            "e_norm": trace.e_norms[k - 1],
            "eps": trace.eps[k - 1],
        }
        row.update(pgm_bound_columns(trace.algorithm, k, L, dist0, trace.e_norms, trace.eps,
                                     sigma_phi, trace.tau))
        rows.append(row)
    return rows
