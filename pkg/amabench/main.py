"""Command-line entry point: ``python -m amabench.main <command> ...``."""

import argparse
import asyncio
import logging
import sys
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from amabench.commands import bounds, certify, generate, solve
from amabench.config import get_settings
from amabench.errors import AmaBenchError, ConfigError, UnsupportedObjectiveError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amabench",
        description="Inexact AMA/FAMA experiments on distributed MPC instances",
    )
    parser.add_argument("--log-level", default=None, help="Overrides AMABENCH_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (generate, solve, certify, bounds):
        command.add_parser(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    level = (args.log_level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    try:
        return asyncio.run(args.handler(args))
    except np.linalg.LinAlgError as e:
        logger.error(f"Failed to {args.command}: {e}")
        return EXIT_NUMERICAL
    except (ConfigError, ValidationError, UnsupportedObjectiveError, ValueError) as e:
        logger.error(f"Failed to {args.command}: {e}")
        return EXIT_CONFIG
    except AmaBenchError as e:
        logger.error(f"Failed to {args.command}: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
