"""Instance JSON files and their content hash."""

import hashlib
import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from amabench.errors import ConfigError

from .network import AgentProblem, Network, NetworkInstance, SelectionMap
from .problem import QuadraticFn
from .schemas import INSTANCE_SCHEMA_VERSION, AgentRecord, InstanceFile
from .sets import BoxSet

logger = logging.getLogger(__name__)


def content_hash(path: Path) -> str:
    """SHA-256 of the file bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def instance_from_record(record: InstanceFile) -> NetworkInstance:
    """Rebuild solver objects from a validated instance record."""
    if record.schema_version != INSTANCE_SCHEMA_VERSION:
        raise ConfigError(f"Unsupported instance schema version {record.schema_version}")
    network = Network(record.M, record.edges)
    network.require_connected()
    maps = SelectionMap(network, record.block_sizes)
    agents = []
    for i, agent in enumerate(record.agents):
        objective = QuadraticFn(np.array(agent.H), np.array(agent.h), agent.offset)
        agents.append(AgentProblem(i, objective, BoxSet(agent.box_lower, agent.box_upper)))
    instance = NetworkInstance(
        network, maps, agents, BoxSet(record.global_lower, record.global_upper),
        metadata={"generator": record.generator, "mpc": record.mpc},
    )
    for i in range(instance.M):
        expected = instance.local_box(i)
        box = instance.agents[i].constraint
        if not (np.array_equal(box.lower, expected.lower) and np.array_equal(box.upper, expected.upper)):
            raise ConfigError(f"Agent {i} box disagrees with the global input box")
    return instance


def record_from_instance(instance: NetworkInstance, **extra) -> InstanceFile:
    """Serialize a network instance (``extra`` fills generator/mpc fields)."""
    agents = [
        AgentRecord(
            H=agent.H.tolist(),
            h=agent.h.tolist(),
            offset=agent.objective.offset,
            box_lower=agent.constraint.lower.tolist(),
            box_upper=agent.constraint.upper.tolist(),
        )
        for agent in instance.agents
    ]
    return InstanceFile(
        M=instance.M,
        block_sizes=list(instance.maps.block_sizes),
        edges=[list(e) for e in instance.network.edges],
        agents=agents,
        global_lower=instance.global_box.lower.tolist(),
        global_upper=instance.global_box.upper.tolist(),
        **extra,
    )


def save_instance(record: InstanceFile, path: Path) -> str:
    """Write the instance JSON and return its content hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(record.model_dump_json(indent=2))
    digest = content_hash(path)
    logger.info(f"Saved instance with {record.M} agents to {path} (sha256 {digest[:12]})")
    return digest


def load_instance(path: Path) -> tuple[NetworkInstance, InstanceFile, str]:
    """Load and validate an instance file.

    Returns:
        (solver instance, raw record, content hash)
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Instance file {path} does not exist")
    try:
        record = InstanceFile.model_validate_json(path.read_text())
    except ValidationError as e:
        raise ConfigError(f"Invalid instance file {path}: {e}") from e
    return instance_from_record(record), record, content_hash(path)
