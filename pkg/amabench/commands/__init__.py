"""CLI subcommands."""

from . import generate, solve, certify, bounds

__all__ = ["generate", "solve", "certify", "bounds"]
