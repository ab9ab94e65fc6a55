"""Reference cache initialization script."""

import asyncio
import sys
from pathlib import Path

from amabench.models.database import database_path, init_database


async def main(instance_path: Path = None):
    """Initialize the cache database."""
    path = database_path(instance_path)
    print("Initializing reference cache...")
    await init_database(path)
    print("Reference cache initialized successfully!")
    print(f"Database location: {path}")


if __name__ == "__main__":
    asyncio.run(main(Path(sys.argv[1]) if len(sys.argv) > 1 else None))
