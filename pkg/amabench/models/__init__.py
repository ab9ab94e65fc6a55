"""Models package."""

from .sets import FEASIBILITY_TOL, ConvexSet, BoxSet, AffineSet, OracleSet
from .qp import solve_box_qp, projected_gradient_solve, minimize_quadratic
from .problem import (
    Objective,
    ZeroFunction,
    Indicator,
    L1Norm,
    QuadraticFn,
    SmoothFn,
    CustomFn,
    SeparableSum,
    SplitProblem,
    InexactProxResult,
    spectral_norm,
)
from .network import Network, SelectionMap, AgentProblem, NetworkInstance
from .schemas import (
    ErrorSchedule,
    DecreaseFunction,
    ScheduleVerdict,
    GeneratorParams,
    ExperimentConfig,
    MpcRecord,
    AgentRecord,
    InstanceFile,
    ReferenceSolution,
)
from .traces import (
    PgmTrace,
    AmaTrace,
    CertRecord,
    PGM_COLUMNS,
    AMA_COLUMNS,
    CERT_COLUMNS,
    write_csv,
    read_csv,
)
from .storage import content_hash, load_instance, save_instance, instance_from_record, record_from_instance
from .database import init_database, get_db, database_path, ReferenceCacheDB

__all__ = [
    "FEASIBILITY_TOL",
    "ConvexSet",
    "BoxSet",
    "AffineSet",
    "OracleSet",
    "solve_box_qp",
    "projected_gradient_solve",
    "minimize_quadratic",
    "Objective",
    "ZeroFunction",
    "Indicator",
    "L1Norm",
    "QuadraticFn",
    "SmoothFn",
    "CustomFn",
    "SeparableSum",
    "SplitProblem",
    "InexactProxResult",
    "spectral_norm",
    "Network",
    "SelectionMap",
    "AgentProblem",
    "NetworkInstance",
    "ErrorSchedule",
    "DecreaseFunction",
    "ScheduleVerdict",
    "GeneratorParams",
    "ExperimentConfig",
    "MpcRecord",
    "AgentRecord",
    "InstanceFile",
    "ReferenceSolution",
    "PgmTrace",
    "AmaTrace",
    "CertRecord",
    "PGM_COLUMNS",
    "AMA_COLUMNS",
    "CERT_COLUMNS",
    "write_csv",
    "read_csv",
    "content_hash",
    "load_instance",
    "save_instance",
    "instance_from_record",
    "record_from_instance",
    "init_database",
    "get_db",
    "database_path",
    "ReferenceCacheDB",
]
