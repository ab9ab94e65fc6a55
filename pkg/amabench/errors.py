"""Exception hierarchy shared by the library and the CLI."""


class AmaBenchError(Exception):
    """Base class for all amabench errors."""


class ConfigError(AmaBenchError, ValueError):
    """Invalid input, parameters or problem data."""


class DimensionError(ConfigError):
    """Inconsistent matrix or vector dimensions."""


class StepSizeError(ConfigError):
    """Step size outside the range an algorithm requires."""


class RankDeficiencyError(ConfigError):
    """A matrix that must have full row rank does not."""


class DisconnectedGraphError(ConfigError):
    """Agent graph is not connected."""


class TraceMismatchError(ConfigError):
    """Trace file does not belong to the given instance."""


class UnsupportedObjectiveError(AmaBenchError, TypeError):
    """Objective lacks the oracle an operation needs."""


class NumericalError(AmaBenchError, RuntimeError):
    """Numerical failure detected during a run."""


class ToleranceNotReachedError(NumericalError):
    """Inner solver could not certify the requested tolerance."""


class InfeasibleIterateError(NumericalError):
    """A point that must lie in its constraint set does not."""


class ResamplingBudgetError(NumericalError):
    """Random generation gave up after too many rejected samples."""


class CommunicationError(AmaBenchError, RuntimeError):
    """An agent tried to read data from a non-neighbor."""
