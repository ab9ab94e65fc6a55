"""``bounds``: recompute bound columns of a trace and check them against the measurements."""

import logging
from pathlib import Path
from typing import Optional

import numpy as np

from amabench.errors import ConfigError
from amabench.models import NetworkInstance, ReferenceSolution, read_csv, write_csv
from amabench.services import (
    DistributedConstants,
    DualSmooth,
    ama_bound_columns,
    build_split,
    conditioning_of,
    distributed_bound_columns,
    pgm_bound_columns,
)

from .solve import columns_for, load_with_reference

logger = logging.getLogger(__name__)

RELATIVE_SLACK = 1e-9
INTEGER_COLUMNS = ("k", "J_min", "J_max", "J_exact_max")


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("bounds", help="Recompute bound columns and report a validity verdict")
    parser.add_argument("--trace", type=Path, required=True)
    parser.add_argument("--instance", type=Path, required=True)
    parser.add_argument("--output", type=Path, default=None, help="Default: <trace>.bounds.csv")
    parser.set_defaults(handler=cmd_bounds)


def _column(rows: list[dict], name: str) -> list[float]:
    values = [row.get(name) for row in rows]
    if any(v is None for v in values):
        raise ConfigError(f"Trace column '{name}' has missing entries")
    return [float(v) for v in values]


def checked_pairs(algorithm: str, quadratic_case: bool, strongly_convex: bool) -> list[tuple[str, str]]:
    """(bound column, measured column) pairs whose assumptions hold for the algorithm."""
    if algorithm == "pgm":
        return [("bound_p1", "obj_gap")] + ([("bound_p3", "dist_to_opt")] if strongly_convex else [])
    if algorithm == "apgm":
        return [("bound_p2", "obj_gap_last")]
    if algorithm == "ama":
        pairs = [("bound_thm1", "dual_gap_avg")]
        if quadratic_case:
            pairs += [("bound_thm2", "dist_lambda"), ("bound_cor5", "dist_lambda")]
        return pairs
    if algorithm == "fama":
        return [("bound_thm4", "dual_gap_last")]
    if algorithm == "dist-ama":
        return [("bound_cor6", "dual_gap_avg"), ("bound_thm1", "dual_gap_avg")]
    if algorithm == "dist-fama":
        return [("bound_cor8", "dual_gap_last"), ("bound_cor8_nom", "dual_gap_last"), ("bound_thm4", "dual_gap_last")]
    raise ConfigError(f"Unknown algorithm '{algorithm}' in trace header")


def violations(rows: list[dict], pairs: list[tuple[str, str]]) -> list[str]:
    """Entries where the measured value exceeds its bound (beyond rounding slack)."""
    found = []
    for row in rows:
        for bound_col, measured_col in pairs:
            bound, measured = row.get(bound_col), row.get(measured_col)
            if bound is None or measured is None:
                continue
            if measured > bound + RELATIVE_SLACK * max(1.0, abs(bound)):
                found.append(f"{bound_col}@k={int(row['k'])}")
    return found


def recompute_rows(algorithm: str, meta: dict, rows: list[dict], instance: NetworkInstance,
                   reference: Optional[ReferenceSolution]) -> tuple[list[dict], list[tuple[str, str]]]:
    """Rows with freshly computed bound cells, and the pairs to check."""
    if reference is None:
        return rows, []
    lam_star = np.array(reference.lambda_star)
    dist0 = float(np.linalg.norm(lam_star))
    tau = float(meta["tau"])
    out = [dict(row) for row in rows]

    if algorithm.startswith("dist"):
        printed = DistributedConstants.from_instance(instance, dist0)
        stepped = DistributedConstants.from_instance(instance, dist0, tau=tau)
        a = _column(rows, "A_delta_norm")
        for k, row in enumerate(out, start=1):
            row.update(distributed_bound_columns(algorithm, k, printed, stepped, tau, a))
        return out, checked_pairs(algorithm, False, False)

    split = build_split(instance.agents, instance.network, instance.maps)
    phi = DualSmooth(split)
    if algorithm in ("pgm", "apgm"):
        e, eps = _column(rows, "e_norm"), _column(rows, "eps")
        for k, row in enumerate(out, start=1):
            row.update(pgm_bound_columns(algorithm, k, phi.lipschitz, dist0, e, eps, phi.sigma, tau))
        return out, checked_pairs(algorithm, False, phi.sigma > 0)

    L_psi = float(meta.get("L_psi", "inf"))
    a, b = _column(rows, "A_delta_norm"), _column(rows, "B_theta_norm")
    cond = conditioning_of(split)
    for k, row in enumerate(out, start=1):
        row.update(ama_bound_columns(algorithm, k, phi.lipschitz, dist0, tau, L_psi, a, b, cond))
    return out, checked_pairs(algorithm, phi.quadratic_assumption and cond is not None, False)


async def cmd_bounds(args) -> int:
    """Recompute, write and judge the bound columns of a trace.

    Returns:
        Exit code (0 whatever the verdict)
    """
    meta, columns, rows = read_csv(args.trace)
    algorithm = meta.get("algorithm")
    if algorithm is None or "tau" not in meta:
        raise ConfigError(f"{args.trace} lacks the algorithm/tau header fields")
    if columns != columns_for(algorithm):
        raise ConfigError(f"{args.trace} does not follow the {algorithm} column schema")

    K = int(meta.get("K", len(rows)))
    instance, _, reference = await load_with_reference(args.instance, K if rows else 0,
                                                       expected_hash=meta.get("instance_hash", "?"))

    updated, pairs = recompute_rows(algorithm, meta, rows, instance, reference)
    for row in updated:
        for name in INTEGER_COLUMNS:
            if row.get(name) is not None:
                row[name] = int(row[name])
    failed = violations(updated, pairs)
    verdict = "pass" if not failed else "fail"

    output = args.output or args.trace.with_suffix(".bounds.csv")
    header = {key: value for key, value in meta.items() if key != "schema_version"}
    header.update(verdict=verdict, checked=",".join(b for b, _ in pairs) or "none")
    write_csv(output, columns, updated, header)

    if failed:
        logger.warning(f"{len(failed)} bound violations in {args.trace}")
        shown = ", ".join(failed[:20]) + (" ..." if len(failed) > 20 else "")
        print(f"verdict: fail ({shown})")
    else:
        print(f"verdict: pass ({len(updated)} rows, checked {', '.join(b for b, _ in pairs) or 'nothing'})")
    return 0
