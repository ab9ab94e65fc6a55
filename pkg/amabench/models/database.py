"""SQLite cache of reference solutions, keyed by instance content hash."""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import aiosqlite

from amabench.config import get_settings

logger = logging.getLogger(__name__)

DATABASE_NAME = "amabench-references.db"


def database_path(instance_path: Optional[Path] = None) -> Path:
    """Cache file in Settings.cache_dir, else beside the instance file."""
    cache_dir = get_settings().cache_dir
    if cache_dir is None:
        cache_dir = Path(instance_path).parent if instance_path is not None else Path.cwd()
    return Path(cache_dir) / DATABASE_NAME


async def get_db(path: Path):
    """Get database connection."""
    db = await aiosqlite.connect(path)
    db.row_factory = aiosqlite.Row
    return db


async def init_database(path: Path):
    """Initialize database schema."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    db = await get_db(path)
    try:
        await db.execute("""
            CREATE TABLE IF NOT EXISTS reference_solutions (
                instance_hash TEXT NOT NULL,
                kind TEXT NOT NULL,
                budget INTEGER NOT NULL,
                payload TEXT NOT NULL,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                PRIMARY KEY (instance_hash, kind, budget)
            )
        """)
        await db.execute(
            "CREATE INDEX IF NOT EXISTS idx_reference_hash ON reference_solutions(instance_hash)"
        )
        await db.commit()
    finally:
        await db.close()


class ReferenceCacheDB:
    """Database operations for cached reference solutions.

    The schema must exist first (`init_database`, `python -m amabench.init_cache`).
    """

    @staticmethod
    async def get(path: Path, instance_hash: str, kind: str, budget: int) -> Optional[dict]:
        """Get a cached payload, or None."""
        db = await get_db(path)
        try:
            async with db.execute(
                "SELECT payload FROM reference_solutions WHERE instance_hash = ? AND kind = ? AND budget = ?",
                (instance_hash, kind, budget),
            ) as cursor:
                row = await cursor.fetchone()
                return json.loads(row["payload"]) if row else None
        finally:
            await db.close()

    @staticmethod
    async def put(path: Path, instance_hash: str, kind: str, budget: int, payload: dict):
        """Store a payload, replacing any previous entry."""
        db = await get_db(path)
        try:
            await db.execute(
                """INSERT OR REPLACE INTO reference_solutions
                   (instance_hash, kind, budget, payload, created_at) VALUES (?, ?, ?, ?, ?)""",
                (instance_hash, kind, budget, json.dumps(payload), datetime.now(timezone.utc).isoformat()),
            )
            await db.commit()
            logger.debug(f"Cached {kind} reference for {instance_hash[:12]} (budget {budget})")
        finally:
            await db.close()

    @staticmethod
    async def clear(path: Path, instance_hash: Optional[str] = None) -> int:
        """Delete cached entries (all, or one instance's). Returns rows removed."""
        db = await get_db(path)
        try:
            if instance_hash is None:
                cursor = await db.execute("DELETE FROM reference_solutions")
            else:
                cursor = await db.execute(
                    "DELETE FROM reference_solutions WHERE instance_hash = ?", (instance_hash,)
                )
            await db.commit()
            return cursor.rowcount
        finally:
            await db.close()

    @staticmethod
    async def count(path: Path) -> int:
        db = await get_db(path)
        try:
            async with db.execute("SELECT COUNT(*) AS n FROM reference_solutions") as cursor:
                row = await cursor.fetchone()
                return int(row["n"])
        finally:
            await db.close()
