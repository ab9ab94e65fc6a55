"""Inexact AMA and FAMA on a split problem, and the AMA ⇔ dual PGM equivalence check.

One AMA iteration:
    x̃^k = argmin_x f(x) − ⟨λ^{k−1}, Ax⟩ + δ^k
    z̃^k = argmin_z g(z) − ⟨λ^{k−1}, Bz⟩ + (τ/2)‖c − Ax̃^k − Bz‖² + θ^k
    λ^k = λ^{k−1} + τ(c − Ax̃^k − Bz̃^k)
FAMA takes each step from λ̂^{k−1} = λ^{k−1} + (k−2)/(k+1)(λ^{k−1} − λ^{k−2}).
"""

import logging
from typing import Optional, Sequence

import numpy as np

from amabench.config import get_settings
from amabench.errors import ConfigError
from amabench.models import AmaTrace, ErrorSchedule, SplitProblem

from .ama_bounds import (
    DualConditioning,
    ama_bounded_error_bound,
    ama_dual_bound,
    ama_linear_bound,
    classify_schedule,
    fama_bound,
    fama_bounded_error_bound,
    geometric_harmonic_series,
    lipschitz_psi,
)
from .inexact_pgm import _proximal_gradient, check_step_size, momentum_weight
from .perturbation import ErrorInjector
from .splitting_core import DualSmooth, augmented_z_step, dual_curvature, dual_objectives, dual_value

logger = logging.getLogger(__name__)

__all__ = [
    "run_inexact_ama",
    "run_inexact_fama",
    "verify_dual_equivalence",
    "reference_multiplier",
    "ama_trace_rows",
    "ama_bound_columns",
    "conditioning_of",
    "ama_dual_bound",
    "ama_linear_bound",
    "fama_bound",
    "ama_bounded_error_bound",
    "fama_bounded_error_bound",
    "classify_schedule",
    "geometric_harmonic_series",
    "lipschitz_psi",
]

FEASIBILITY_TOL = 1e-9


def _is_feasible(projector, z: np.ndarray) -> bool:
    if projector is None:
        return True
    return bool(np.linalg.norm(projector(z) - z) <= FEASIBILITY_TOL * max(1.0, float(np.linalg.norm(z))))


def _alternating_minimization(
    p: SplitProblem,
    lam0: np.ndarray,
    tau: float,
    K: int,
    delta_sched: ErrorSchedule,
    theta_sched: ErrorSchedule,
    rng_seed: int,
    momentum: bool,
    feasible_only: bool = True,
    record_dual: bool = True,
) -> AmaTrace:
    phi = DualSmooth(p)
    check_step_size(tau, phi.lipschitz)
    if K < 0:
        raise ConfigError(f"Iteration count must be nonnegative, got {K}")
    lam0 = np.asarray(lam0, dtype=float)
    if lam0.size != p.n_c:
        raise ConfigError(f"lambda0 has length {lam0.size}, expected {p.n_c}")

    algorithm = "fama" if momentum else "ama"
    injector = ErrorInjector(rng_seed)
    x_projector = p.f.domain_projector() if feasible_only else None
    z_projector = p.g.domain_projector() if feasible_only else None
    z_domain = p.g.domain_projector()
    inner_tol = get_settings().inner_tol

    trace = AmaTrace(algorithm=algorithm, tau=tau, seed=rng_seed, lam0=lam0.copy())
    lam_prev = lam0.copy()
    lam_hat = lam0.copy()
    running = np.zeros_like(lam0)
    logger.info(f"Running inexact {algorithm.upper()} for {K} iterations (tau={tau:.4g}, seed={rng_seed})")

    for k in range(1, K + 1):
        x_star = phi.minimizer(lam_hat)
        x = x_star + injector.delta(p.f.dim, delta_sched.magnitude(k))
        if x_projector is not None:
            x = x_projector(x)
        delta = x - x_star

        Ax = np.asarray(p.A @ x).ravel()
        z_star = augmented_z_step(p, p.c - Ax + lam_hat / tau, tau)
        z = z_star + injector.theta(p.g.dim, theta_sched.magnitude(k))
        if z_projector is not None:
            z = z_projector(z)
        theta = z - z_star

        lam = lam_hat + tau * (p.c - Ax - np.asarray(p.B @ z).ravel())
        lam_hat = lam + momentum_weight(k) * (lam - lam_prev) if momentum else lam
        lam_prev = lam

        trace.x.append(x)
        trace.z.append(z)
        trace.lam.append(lam)
        trace.lam_hat.append(lam_hat)
        trace.deltas.append(delta)
        trace.thetas.append(theta)
        trace.delta_norms.append(float(np.linalg.norm(delta)))
        trace.theta_norms.append(float(np.linalg.norm(theta)))
        trace.A_delta_norms.append(float(np.linalg.norm(p.A @ delta)))
        trace.B_theta_norms.append(float(np.linalg.norm(p.B @ theta)))
        trace.z_feasible.append(_is_feasible(z_domain, z))
        if record_dual:
            running += lam
            trace.dual_values.append(dual_value(p, lam, inner_tol))
            trace.dual_values_avg.append(dual_value(p, running / k, inner_tol))
        if k % 50 == 0:
            logger.debug(f"{algorithm} k={k}: |lambda|={np.linalg.norm(lam):.6g}")
    return trace


def run_inexact_ama(p: SplitProblem, lambda0: np.ndarray, tau: float, K: int,
                    delta_sched: ErrorSchedule, theta_sched: ErrorSchedule, rng_seed: int = 0,
                    feasible_only: bool = True, record_dual: bool = True) -> AmaTrace:
    """Inexact AMA for K iterations."""
    return _alternating_minimization(p, lambda0, tau, K, delta_sched, theta_sched, rng_seed,
                                     momentum=False, feasible_only=feasible_only, record_dual=record_dual)


def run_inexact_fama(p: SplitProblem, lambda0: np.ndarray, tau: float, K: int,
                     delta_sched: ErrorSchedule, theta_sched: ErrorSchedule, rng_seed: int = 0,
                     feasible_only: bool = True, record_dual: bool = True) -> AmaTrace:
    """Inexact FAMA (AMA with momentum on the multipliers) for K iterations."""
    return _alternating_minimization(p, lambda0, tau, K, delta_sched, theta_sched, rng_seed,
                                     momentum=True, feasible_only=feasible_only, record_dual=record_dual)


def verify_dual_equivalence(p: SplitProblem, lambda0: np.ndarray, tau: float, K: int,
                            schedules: tuple[ErrorSchedule, ErrorSchedule], rng_seed: int = 0,
                            algorithm: str = "ama") -> float:
    """Max over k of ‖λ^k_AMA − w^k_PGM‖ with matched error realizations.

    The PGM side runs on the dual pair with gradient error e^k = Aδ^k and an
    inexact prox realized as prox_{τψ}(y) − τBθ^k (FAMA pairs with APGM).
    """
    if algorithm not in ("ama", "fama"):
        raise ConfigError(f"Equivalence is checked for ama or fama, got {algorithm}")
    delta_sched, theta_sched = schedules
    momentum = algorithm == "fama"
    trace = _alternating_minimization(p, lambda0, tau, K, delta_sched, theta_sched, rng_seed,
                                      momentum=momentum, record_dual=False)
    phi, psi = dual_objectives(p)
    L_psi, _ = lipschitz_psi(p, trace.lam)
    A_deltas = [np.asarray(p.A @ d).ravel() for d in trace.deltas]
    B_thetas = [np.asarray(p.B @ t).ravel() for t in trace.thetas]

    def gradient_error(k, _v):
        return A_deltas[k - 1]

    def prox_step(k, y):
        b = float(np.linalg.norm(B_thetas[k - 1]))
        eps = tau ** 2 * L_psi * b + 0.5 * tau ** 2 * b ** 2 if b > 0 else 0.0
        return psi.prox(y, tau) - tau * B_thetas[k - 1], eps

    iterates, _, _ = _proximal_gradient(phi, np.asarray(lambda0, dtype=float), tau, K,
                                        gradient_error, prox_step, momentum)
    deviation = max((float(np.linalg.norm(a - b)) for a, b in zip(trace.lam, iterates)), default=0.0)
    logger.info(f"{algorithm.upper()} vs dual {'APGM' if momentum else 'PGM'}: max deviation {deviation:.3e}")
    return deviation


def reference_multiplier(p: SplitProblem, lambda0: np.ndarray, tau: float, budget: int,
                         tol: Optional[float] = None) -> tuple[np.ndarray, int]:
    """λ⋆ from exact FAMA, stopped early once ‖λ^k − λ^{k−1}‖ drops below ``tol``.

    Returns:
        (λ⋆, iterations used)
    """
    tol = tol if tol is not None else get_settings().reference_tol
    phi = DualSmooth(p)
    check_step_size(tau, phi.lipschitz)
    lam_prev = np.asarray(lambda0, dtype=float).copy()
    lam_hat = lam_prev.copy()
    k = 0
    for k in range(1, budget + 1):
        Ax = np.asarray(p.A @ phi.minimizer(lam_hat)).ravel()
        z = augmented_z_step(p, p.c - Ax + lam_hat / tau, tau)
        lam = lam_hat + tau * (p.c - Ax - np.asarray(p.B @ z).ravel())
        step = float(np.linalg.norm(lam - lam_prev))
        lam_hat = lam + momentum_weight(k) * (lam - lam_prev)
        lam_prev = lam
        if step <= tol * max(1.0, float(np.linalg.norm(lam))):
            break
    logger.info(f"Reference multiplier after {k} exact FAMA iterations")
    return lam_prev, k


def conditioning_of(p: SplitProblem) -> Optional[DualConditioning]:
    """A H⁻¹ Aᵀ conditioning when f is quadratic and A has full row rank."""
    curvature = dual_curvature(p)
    if curvature is None or curvature[0] <= 1e-12 * curvature[1]:
        return None
    return DualConditioning(*curvature)


def ama_bound_columns(algorithm: str, k: int, L: float, dist0: float, tau: float, L_psi: float,
                      A_delta_norms: Sequence[float], B_theta_norms: Sequence[float],
                      cond: Optional[DualConditioning] = None) -> dict:
    """Bound cells of row k for a centralized AMA/FAMA trace, from measured ‖Aδ^p‖ and ‖Bθ^p‖."""
    a, b = A_delta_norms, B_theta_norms
    if algorithm != "ama":
        return {"bound_thm4": fama_bound(k, L, dist0, 1.0, 1.0, tau, L_psi, a, b, mapped_norms=True)}
    cells = {"bound_thm1": ama_dual_bound(k, L, dist0, 1.0, 1.0, tau, L_psi, a, b, mapped_norms=True)}
    if cond is not None:
        cells["bound_thm2"] = ama_linear_bound(k, None, 1.0, tau, L_psi, dist0, a, b, mapped_norms=True,
                                               step_aware=True, conditioning=cond)
        cells["bound_cor5"] = ama_bounded_error_bound(k, None, 1.0, tau, L_psi, dist0, max(a[:k]), max(b[:k]),
                                                      mapped_norms=True, step_aware=True, conditioning=cond)
    return cells


def ama_trace_rows(p: SplitProblem, trace: AmaTrace, lam_star: np.ndarray, dual_star: float,
                   L_psi: Optional[float] = None, u_star: Optional[np.ndarray] = None) -> list[dict]:
    """CSV rows (centralized columns) for an AMA/FAMA trace, with every applicable bound.

    ``u_star`` adds the ‖z^k − u⋆‖ column for splits whose z is the network input.
    """
    L = DualSmooth(p).lipschitz
    if L_psi is None:
        L_psi, regime = lipschitz_psi(p, trace.lam)
        logger.info(f"L(psi) regime: {regime} ({L_psi:g})")
    dist0 = float(np.linalg.norm(trace.lam0 - lam_star))
    cond = conditioning_of(p)
    rows = []
    for k in range(1, trace.K + 1):
        row = {
            "k": k,
            "dual_gap_last": dual_star - trace.dual_values[k - 1] if trace.dual_values else None,
            "dual_gap_avg": dual_star - trace.dual_values_avg[k - 1] if trace.dual_values_avg else None,
            "dist_lambda": float(np.linalg.norm(trace.lam[k - 1] - lam_star)),
            "delta_norm": trace.delta_norms[k - 1],
            "theta_norm": trace.theta_norms[k - 1],
            "A_delta_norm": trace.A_delta_norms[k - 1],
            "B_theta_norm": trace.B_theta_norms[k - 1],
        }
        if u_star is not None:
            row["u_err"] = float(np.linalg.norm(trace.z[k - 1] - u_star))
        row.update(ama_bound_columns(trace.algorithm, k, L, dist0, trace.tau, L_psi,
                                     trace.A_delta_norms, trace.B_theta_norms, cond))
        rows.append(row)
    return rows
