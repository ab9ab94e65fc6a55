"""Pydantic schemas for experiment inputs, instance files and reference solutions."""

from pathlib import Path
from typing import Literal, Optional, List, Dict

from pydantic import BaseModel, Field, model_validator

INSTANCE_SCHEMA_VERSION = 1

Algorithm = Literal["pgm", "apgm", "ama", "fama", "dist-ama", "dist-fama"]
RPlacement = Literal["own", "shared", "neighborhood"]


# Error schedules
class ErrorSchedule(BaseModel):
    """Magnitude sequence for injected errors: 0, c, c/k^p or c·r^k."""
    family: Literal["zero", "constant", "power", "geometric"] = "zero"
    c: float = Field(default=0.0, ge=0)
    p: float = Field(default=0.0, ge=0)
    r: float = Field(default=0.0, ge=0, lt=1)

    @classmethod
    def parse(cls, text: str) -> "ErrorSchedule":
        """Parse ``zero``, ``constant:c``, ``power:c:p`` or ``geometric:c:r``."""
        parts = text.strip().lower().split(":")
        family, args = parts[0], [float(a) for a in parts[1:]]
        expected = {"zero": 0, "constant": 1, "power": 2, "geometric": 2}
        if family not in expected or len(args) != expected[family]:
            raise ValueError(f"Invalid schedule '{text}' (use zero, constant:c, power:c:p or geometric:c:r)")
        if family == "constant":
            return cls(family=family, c=args[0])
        if family == "power":
            return cls(family=family, c=args[0], p=args[1])
        if family == "geometric":
            return cls(family=family, c=args[0], r=args[1])
        return cls()

    def magnitude(self, k: int) -> float:
        if self.family == "zero" or self.c == 0:
            return 0.0
        if self.family == "constant":
            return self.c
        if self.family == "power":
            return self.c / float(k) ** self.p
        return self.c * self.r ** k

    @property
    def is_zero(self) -> bool:
        return self.family == "zero" or self.c == 0

    def label(self) -> str:
        if self.family == "zero":
            return "zero"
        if self.family == "constant":
            return f"constant:{self.c:g}"
        if self.family == "power":
            return f"power:{self.c:g}:{self.p:g}"
        return f"geometric:{self.c:g}:{self.r:g}"


class DecreaseFunction(BaseModel):
    """Prescribed local error bound α^k = α⁰/k^p or α⁰·r^k."""
    rate: Literal["power", "geometric"] = "power"
    p: float = Field(default=1.0, ge=0)
    r: float = Field(default=0.5, gt=0, le=1)
    alpha0: Optional[float] = Field(default=None, gt=0)

    @classmethod
    def parse(cls, text: str, alpha0: Optional[float] = None) -> "DecreaseFunction":
        """Parse ``power:p`` or ``geometric:r``."""
        parts = text.strip().lower().split(":")
        if len(parts) != 2 or parts[0] not in ("power", "geometric"):
            raise ValueError(f"Invalid decrease function '{text}' (use power:p or geometric:r)")
        if parts[0] == "power":
            return cls(rate="power", p=float(parts[1]), alpha0=alpha0)
        return cls(rate="geometric", r=float(parts[1]), alpha0=alpha0)

    def value(self, k: int) -> float:
        """α^k; k = 0 gives α⁰."""
        if self.alpha0 is None:
            raise ValueError("alpha0 is not set")
        if k == 0:
            return self.alpha0
        if self.rate == "power":
            return self.alpha0 / float(k) ** self.p
        return self.alpha0 * self.r ** k


class ScheduleVerdict(BaseModel):
    """Whether an error schedule pair guarantees convergence, and why."""
    converges: Literal["yes", "yes-to-neighborhood", "not-guaranteed"]
    rationale: str


# Generator / experiment configuration
class GeneratorParams(BaseModel):
    """Random distributed-MPC instance parameters."""
    M: int = Field(default=40, ge=1)
    n_x: int = Field(default=3, ge=1)
    n_u: int = Field(default=2, ge=1)
    N: int = Field(default=11, ge=1)
    box_lower: float = -0.4
    box_upper: float = 0.3
    seed: int = 1
    neighbor_min: int = Field(default=2, ge=0)
    neighbor_max: int = Field(default=4, ge=0)
    state_scale: float = Field(default=0.6, gt=0)
    input_scale: float = Field(default=0.2, gt=0)
    spectral_cap: float = Field(default=1.1, gt=0)
    activation_target: float = Field(default=0.7, ge=0, le=1)
    activation_scale: Optional[float] = Field(default=None, gt=0)
    r_placement: RPlacement = "own"
    max_resample: int = Field(default=100, ge=1)

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.box_lower > self.box_upper:
            raise ValueError("box lower bound exceeds upper bound")
        if self.neighbor_min > self.neighbor_max:
            raise ValueError("neighbor range is empty")
        return self


class ExperimentConfig(BaseModel):
    """One algorithm run on one instance."""
    instance: Path
    algorithm: Algorithm = "dist-ama"
    delta: ErrorSchedule = Field(default_factory=ErrorSchedule)
    theta: ErrorSchedule = Field(default_factory=ErrorSchedule)
    certified: Optional[DecreaseFunction] = None
    K: int = Field(default=500, ge=0)
    seed: int = 0
    output: Path
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_mode(self):
        if self.certified is not None:
            if self.algorithm not in ("dist-ama", "dist-fama"):
                raise ValueError("certified inner solves are only available for dist-ama and dist-fama")
            if not (self.delta.is_zero and self.theta.is_zero):
                raise ValueError("certified mode and error schedules are mutually exclusive")
        if self.algorithm.startswith("dist") and not self.theta.is_zero:
            raise ValueError("distributed runs have no z-step error (theta must be zero)")
        return self


# Instance files
class MpcRecord(BaseModel):
    """Raw LTI data an instance was condensed from."""
    N: int
    n_x: int
    n_u: int
    A: List[List[List[float]]]
    B: Dict[str, List[List[float]]]  # "i,j" -> B_ij
    x0: List[List[float]]
    r_placement: RPlacement
    ridge_agents: List[int] = Field(default_factory=list)
    activation_scale: float = 1.0


class AgentRecord(BaseModel):
    """Condensed local QP of one agent."""
    H: List[List[float]]
    h: List[float]
    offset: float = 0.0
    box_lower: List[float]
    box_upper: List[float]


class InstanceFile(BaseModel):
    """Serialized network instance."""
    schema_version: int = INSTANCE_SCHEMA_VERSION
    M: int
    block_sizes: List[int]
    edges: List[List[int]]
    agents: List[AgentRecord]
    global_lower: List[float]
    global_upper: List[float]
    generator: Optional[GeneratorParams] = None
    mpc: Optional[MpcRecord] = None


class ReferenceSolution(BaseModel):
    """Ground truth for one instance."""
    u_star: List[float]
    lambda_star: List[float]
    primal_optimum: float
    dual_optimum: float
    budget: int
    iterations: int
