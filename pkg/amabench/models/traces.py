"""Per-iteration trace containers and their CSV encoding.

CSV files start with ``# key=value`` comment lines (schema version, algorithm,
step size, seed, instance hash, ...) followed by a header row whose column
order is fixed per schema.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from amabench.errors import ConfigError

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1

PGM_COLUMNS = [
    "k", "obj_gap", "dist_to_opt", "e_norm", "eps",
    "bound_p1", "bound_p2", "bound_p3",
    "obj_gap_last",
]

AMA_COLUMNS = [
    "k", "dual_gap_avg", "dual_gap_last", "dist_lambda", "delta_norm", "theta_norm",
    "bound_thm1", "bound_thm2", "bound_thm4", "bound_cor5",
    "A_delta_norm", "B_theta_norm", "u_err", "ET_lambda_inf",
    "bound_cor6", "bound_cor7", "bound_cor7_thm2", "bound_cor8", "bound_cor8_nom",
    "J_mean", "J_min", "J_max", "J_exact_mean", "J_exact_max",
]

CERT_COLUMNS = [
    "k", "agent", "beta_k", "alpha_k", "J_certified", "J_exact", "delta_measured", "certified_ok",
]


@dataclass
class PgmTrace:
    """Inexact (accelerated) proximal-gradient run."""

    algorithm: str
    tau: float
    seed: int
    w0: np.ndarray
    iterates: list[np.ndarray] = field(default_factory=list)
    averages: list[np.ndarray] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    objective_avg: list[float] = field(default_factory=list)
    e_norms: list[float] = field(default_factory=list)
    eps: list[float] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.iterates)


@dataclass
class AmaTrace:
    """Inexact AMA/FAMA run, centralized or distributed.

    ``lam`` holds λ^k; for FAMA ``lam_hat`` holds the extrapolated λ̂^k that
    step k+1 consumes. ``u`` holds the consensus variable for distributed runs.
    """

    algorithm: str
    tau: float
    seed: int
    lam0: np.ndarray
    x: list[np.ndarray] = field(default_factory=list)
    z: list[np.ndarray] = field(default_factory=list)
    lam: list[np.ndarray] = field(default_factory=list)
    lam_hat: list[np.ndarray] = field(default_factory=list)
    dual_values: list[float] = field(default_factory=list)
    dual_values_avg: list[float] = field(default_factory=list)
    delta_norms: list[float] = field(default_factory=list)
    theta_norms: list[float] = field(default_factory=list)
    A_delta_norms: list[float] = field(default_factory=list)
    B_theta_norms: list[float] = field(default_factory=list)
    z_feasible: list[bool] = field(default_factory=list)
    u: list[np.ndarray] = field(default_factory=list)
    ET_lambda_inf: list[float] = field(default_factory=list)
    J_certified: list[list[int]] = field(default_factory=list)
    J_exact: list[list[int]] = field(default_factory=list)
    deltas: list[np.ndarray] = field(default_factory=list)
    thetas: list[np.ndarray] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.lam)


@dataclass(frozen=True)
class CertRecord:
    """Certification data of one agent at one outer iteration."""

    k: int
    agent: int
    beta_k: float
    alpha_k: float
    J_certified: int
    J_exact: Optional[int]
    delta_measured: float
    certified_ok: bool = True  # delta_measured <= alpha_k

    def as_row(self) -> dict:
        return {
            "k": self.k,
            "agent": self.agent,
            "beta_k": self.beta_k,
            "alpha_k": self.alpha_k,
            "J_certified": self.J_certified,
            "J_exact": "" if self.J_exact is None else self.J_exact,
            "delta_measured": self.delta_measured,
            "certified_ok": self.certified_ok,
        }


def _format(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return repr(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict], header: Optional[dict] = None) -> int:
    """Write rows in a fixed column order; missing cells stay empty.

    Returns:
        Number of data rows written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"schema_version": CSV_SCHEMA_VERSION, **(header or {})}
    count = 0
    with path.open("w", newline="") as handle:
        for key, value in meta.items():
            handle.write(f"# {key}={value}\n")
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            unknown = set(row) - set(columns)
            if unknown:
                raise ConfigError(f"Row has columns outside the schema: {sorted(unknown)}")
            writer.writerow([_format(row.get(col)) for col in columns])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return count


def read_csv(path: Path) -> tuple[dict, list[str], list[dict]]:
    """Read a trace CSV.

    Returns:
        (header metadata, column names, rows with float values; empty cells become None)
    """
    path = Path(path)
    meta: dict[str, str] = {}
    with path.open(newline="") as handle:
        lines = handle.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    if not body:
        raise ConfigError(f"{path} has no header row")
    reader = csv.reader(body)
    columns = next(reader)
    rows = []
    for record in reader:
        rows.append({col: (float(cell) if cell != "" else None) for col, cell in zip(columns, record)})
    return meta, columns, rows
