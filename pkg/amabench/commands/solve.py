"""``solve``: run one algorithm on an instance and write its trace CSV."""

import logging
from pathlib import Path
from typing import Optional

import numpy as np

from amabench.config import get_settings
from amabench.errors import TraceMismatchError
from amabench.models import (
    AMA_COLUMNS,
    PGM_COLUMNS,
    ErrorSchedule,
    ExperimentConfig,
    NetworkInstance,
    ReferenceSolution,
    load_instance,
    write_csv,
)
from amabench.services import (
    DualSmooth,
    ExactLocalSolver,
    PerturbedLocalSolver,
    ama_trace_rows,
    build_split,
    classify_schedule,
    default_distributed_step,
    default_step,
    distributed_trace_rows,
    dual_objectives,
    get_reference_service,
    lipschitz_psi,
    pgm_trace_rows,
    run_distributed_ifama,
    run_distributed_iama,
    run_inexact_ama,
    run_inexact_apgm,
    run_inexact_fama,
    run_inexact_pgm,
)

logger = logging.getLogger(__name__)

ALGORITHMS = ["pgm", "apgm", "ama", "fama", "dist-ama", "dist-fama"]


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("solve", help="Run an algorithm with injected error schedules")
    parser.add_argument("--instance", type=Path, required=True)
    parser.add_argument("--algorithm", choices=ALGORITHMS, default="dist-ama")
    parser.add_argument("--delta", default="zero", help="x-step / gradient error: zero, constant:c, power:c:p, geometric:c:r")
    parser.add_argument("--theta", default="zero", help="z-step / prox error (centralized runs only)")
    parser.add_argument("--K", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--output", type=Path, required=True)
    parser.set_defaults(handler=cmd_solve)


def columns_for(algorithm: str) -> list[str]:
    return PGM_COLUMNS if algorithm in ("pgm", "apgm") else AMA_COLUMNS


async def load_with_reference(
    instance_path: Path, K: int, expected_hash: Optional[str] = None
) -> tuple[NetworkInstance, str, Optional[ReferenceSolution]]:
    """Load an instance and its (cached) reference; no reference is needed for K = 0.

    With ``expected_hash`` the instance must match it before any reference work starts.
    """
    instance, _, digest = load_instance(instance_path)
    if expected_hash is not None and expected_hash != digest:
        raise TraceMismatchError(f"Trace was produced on instance {expected_hash[:12]}, got {digest[:12]}")
    logger.info(f"Loaded instance {instance_path}: {instance.summary()}")
    if K == 0:
        return instance, digest, None
    reference = await get_reference_service().get_reference(instance, digest, instance_path, K)
    return instance, digest, reference


def run_experiment(config: ExperimentConfig, instance: NetworkInstance,
                   reference: Optional[ReferenceSolution]) -> tuple[list[dict], dict]:
    """Run the configured algorithm.

    Returns:
        (CSV rows, extra header fields)
    """
    lam_star = np.array(reference.lambda_star) if reference else None
    u_star = np.array(reference.u_star) if reference else None
    dual_star = reference.dual_optimum if reference else 0.0

    if config.algorithm.startswith("dist"):
        tau = default_distributed_step(instance)
        if config.delta.is_zero:
            local = ExactLocalSolver(instance)
        else:
            local = PerturbedLocalSolver(instance, config.delta, config.seed)
        runner = run_distributed_iama if config.algorithm == "dist-ama" else run_distributed_ifama
        trace = runner(instance, local, tau, config.K, threads=config.threads)
        rows = distributed_trace_rows(instance, trace, lam_star, dual_star, u_star) if reference else []
        return rows, {"tau": tau, "L_psi": 0.0}

    split = build_split(instance.agents, instance.network, instance.maps)
    phi, psi = dual_objectives(split)
    tau = default_step(phi.lipschitz)
    lam0 = np.zeros(split.n_c)

    if config.algorithm in ("pgm", "apgm"):
        runner = run_inexact_pgm if config.algorithm == "pgm" else run_inexact_apgm
        trace = runner(phi, psi, lam0, tau, config.K, config.delta, config.theta, rng_seed=config.seed)
        rows = pgm_trace_rows(trace, lam_star, -dual_star, phi.lipschitz, phi.sigma) if reference else []
        return rows, {"tau": tau, "L": phi.lipschitz, "sigma_phi": phi.sigma}

    runner = run_inexact_ama if config.algorithm == "ama" else run_inexact_fama
    trace = runner(split, lam0, tau, config.K, config.delta, config.theta, rng_seed=config.seed)
    L_psi, regime = lipschitz_psi(split, trace.lam)
    verdict = classify_schedule(config.delta, config.theta, config.algorithm,
                                DualSmooth(split).quadratic_assumption, np.isfinite(L_psi))
    logger.info(f"Schedule verdict: {verdict.converges} ({verdict.rationale})")
    rows = ama_trace_rows(split, trace, lam_star, dual_star, L_psi, u_star) if reference else []
    return rows, {"tau": tau, "L": phi.lipschitz, "L_psi": L_psi, "L_psi_regime": regime,
                  "schedule_verdict": verdict.converges}


def trace_header(config: ExperimentConfig, digest: str, extra: dict) -> dict:
    return {
        "algorithm": config.algorithm,
        "K": config.K,
        "seed": config.seed,
        "instance_hash": digest,
        "delta": config.delta.label(),
        "theta": config.theta.label(),
        **extra,
    }


async def cmd_solve(args) -> int:
    """Run the configured algorithm and write the trace.

    Returns:
        Exit code
    """
    config = ExperimentConfig(
        instance=args.instance,
        algorithm=args.algorithm,
        delta=ErrorSchedule.parse(args.delta),
        theta=ErrorSchedule.parse(args.theta),
        K=args.K,
        seed=args.seed,
        output=args.output,
        threads=args.threads or get_settings().threads,
    )
    instance, digest, reference = await load_with_reference(config.instance, config.K)
    rows, extra = run_experiment(config, instance, reference)
    write_csv(config.output, columns_for(config.algorithm), rows, trace_header(config, digest, extra))
    if rows and "u_err" in rows[-1]:
        print(f"{config.algorithm}: terminal |u - u*| = {rows[-1]['u_err']:.6e} after {config.K} iterations")
    else:
        print(f"{config.algorithm}: wrote {len(rows)} rows to {config.output}")
    return 0
