"""Ground-truth solutions for an instance, cached by content hash."""

import asyncio
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from amabench.config import get_settings
from amabench.models import NetworkInstance, ReferenceCacheDB, ReferenceSolution, database_path, init_database

from .distributed_solver import build_split
from .dmpc_builder import solve_monolithic
from .inexact_ama import reference_multiplier
from .inexact_pgm import default_step
from .splitting_core import DualSmooth, dual_value

logger = logging.getLogger(__name__)

REFERENCE_KIND = "dmpc"


def compute_reference(instance: NetworkInstance, budget: int) -> ReferenceSolution:
    """u⋆ and p⋆ from the monolithic QP, λ⋆ from exact FAMA on the distributed split.

    By strong duality p⋆ is the dual optimum; D(λ⋆) is only logged.
    """
    u_star, primal = solve_monolithic(instance)
    split = build_split(instance.agents, instance.network, instance.maps)
    tau = default_step(DualSmooth(split).lipschitz)
    lam_star, used = reference_multiplier(split, np.zeros(split.n_c), tau, budget)
    dual_at_star = dual_value(split, lam_star)
    logger.info(f"Reference: p* = {primal:.12g}, D(lambda*) = {dual_at_star:.12g} ({used} iterations)")
    return ReferenceSolution(
        u_star=u_star.tolist(),
        lambda_star=lam_star.tolist(),
        primal_optimum=primal,
        dual_optimum=primal,
        budget=budget,
        iterations=used,
    )


class ReferenceService:
    """Service for reference solutions backed by the SQLite cache."""

    def __init__(self):
        self._initialized: set[Path] = set()

    async def _database(self, instance_path: Path) -> Path:
        """Cache file for the instance, with its schema created once per service."""
        path = database_path(instance_path)
        if path not in self._initialized:
            await init_database(path)
            self._initialized.add(path)
        return path

    async def get_reference(
        self,
        instance: NetworkInstance,
        instance_hash: str,
        instance_path: Path,
        K: int,
        refresh: bool = False,
    ) -> ReferenceSolution:
        """Cached reference for a run of K iterations (budget = reference_multiplier·K).

        Args:
            instance: Loaded instance
            instance_hash: Content hash of the instance file
            instance_path: Instance file (locates the cache when cache_dir is unset)
            K: Iteration count of the run being evaluated
            refresh: Recompute even when cached

        Returns:
            Reference solution
        """
        budget = get_settings().reference_multiplier * max(K, 1)
        db_path = await self._database(instance_path)
        if not refresh:
            cached = await ReferenceCacheDB.get(db_path, instance_hash, REFERENCE_KIND, budget)
            if cached is not None:
                logger.info(f"Reference cache hit for {instance_hash[:12]} (budget {budget})")
                return ReferenceSolution(**cached)

        logger.info(f"Computing reference for {instance_hash[:12]} (budget {budget})")
        solution = await asyncio.to_thread(compute_reference, instance, budget)
        await ReferenceCacheDB.put(db_path, instance_hash, REFERENCE_KIND, budget, solution.model_dump())
        return solution

    async def clear(self, instance_path: Path, instance_hash: Optional[str] = None) -> int:
        removed = await ReferenceCacheDB.clear(await self._database(instance_path), instance_hash)
        logger.info(f"Removed {removed} cached references")
        return removed


# Global service instance
_reference_service: Optional[ReferenceService] = None


def get_reference_service() -> ReferenceService:
    """Get or create reference service instance."""
    global _reference_service
    if _reference_service is None:
        _reference_service = ReferenceService()
    return _reference_service
