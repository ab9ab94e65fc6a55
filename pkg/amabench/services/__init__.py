"""Services package."""

from .perturbation import ErrorInjector
from .splitting_core import (
    DUAL_UNBOUNDED,
    DualNonsmooth,
    DualSmooth,
    augmented_z_step,
    dual_objectives,
    dual_value,
    prox,
    prox_inexact,
    prox_objective,
)
from .inexact_pgm import (
    apgm_bound,
    default_step,
    pgm_bound_columns,
    pgm_bound_convex,
    pgm_bound_strongly_convex,
    pgm_trace_rows,
    reference_optimum,
    run_inexact_apgm,
    run_inexact_pgm,
)
from .ama_bounds import (
    ama_bounded_error_bound,
    ama_dual_bound,
    ama_linear_bound,
    classify_schedule,
    fama_bound,
    fama_bounded_error_bound,
    geometric_harmonic_series,
    lipschitz_psi,
)
from .inexact_ama import (
    ama_bound_columns,
    ama_trace_rows,
    conditioning_of,
    reference_multiplier,
    run_inexact_ama,
    run_inexact_fama,
    verify_dual_equivalence,
)
from .distributed_solver import (
    DistributedConstants,
    ExactLocalSolver,
    LocalSolution,
    LocalSolverPort,
    NeighborExchange,
    PerturbedLocalSolver,
    build_split,
    check_null_multiplier,
    consensus,
    default_distributed_step,
    distributed_bound,
    distributed_bound_columns,
    distributed_trace_rows,
    run_distributed_ifama,
    run_distributed_iama,
)
from .local_certified_solver import (
    CertifiedLocalSolver,
    CertState,
    certify_iterations,
    default_alpha0,
    exact_min_iterations,
    lipschitz_of_argmin,
    local_pg,
)
from .dmpc_builder import (
    LtiAgent,
    MpcSpec,
    condense,
    generate_random_instance,
    monolithic_qp,
    prediction_matrices,
    solve_monolithic,
)
from .reference_service import ReferenceService, get_reference_service

__all__ = [
    "ErrorInjector",
    "DUAL_UNBOUNDED",
    "DualSmooth",
    "DualNonsmooth",
    "augmented_z_step",
    "dual_objectives",
    "dual_value",
    "prox",
    "prox_inexact",
    "prox_objective",
    "run_inexact_pgm",
    "run_inexact_apgm",
    "pgm_bound_convex",
    "apgm_bound",
    "pgm_bound_strongly_convex",
    "pgm_trace_rows",
    "pgm_bound_columns",
    "default_step",
    "reference_optimum",
    "ama_dual_bound",
    "fama_bound",
    "ama_linear_bound",
    "ama_bounded_error_bound",
    "fama_bounded_error_bound",
    "classify_schedule",
    "geometric_harmonic_series",
    "lipschitz_psi",
    "run_inexact_ama",
    "run_inexact_fama",
    "verify_dual_equivalence",
    "reference_multiplier",
    "ama_trace_rows",
    "ama_bound_columns",
    "conditioning_of",
    "build_split",
    "consensus",
    "check_null_multiplier",
    "NeighborExchange",
    "LocalSolution",
    "LocalSolverPort",
    "ExactLocalSolver",
    "PerturbedLocalSolver",
    "default_distributed_step",
    "run_distributed_iama",
    "run_distributed_ifama",
    "DistributedConstants",
    "distributed_bound",
    "distributed_trace_rows",
    "distributed_bound_columns",
    "local_pg",
    "certify_iterations",
    "lipschitz_of_argmin",
    "exact_min_iterations",
    "default_alpha0",
    "CertState",
    "CertifiedLocalSolver",
    "LtiAgent",
    "MpcSpec",
    "condense",
    "generate_random_instance",
    "monolithic_qp",
    "prediction_matrices",
    "solve_monolithic",
    "ReferenceService",
    "get_reference_service",
]
