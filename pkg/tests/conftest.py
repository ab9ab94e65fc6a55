"""Shared fixtures: small split problems and tiny generated MPC instances."""

import numpy as np
import pytest

from amabench.config import reset_settings
from amabench.models import (
    BoxSet,
    GeneratorParams,
    Indicator,
    QuadraticFn,
    SplitProblem,
    save_instance,
)
from amabench.services import generate_random_instance

# `shared` charges each R once like the default `own`, with every local Hessian strongly convex.
TINY_PARAMS = dict(M=3, n_x=2, n_u=1, N=3, seed=7, neighbor_min=1, neighbor_max=2, activation_scale=3.0,
                   r_placement="shared")


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Fresh settings per test with the reference cache under tmp_path."""
    monkeypatch.setenv("AMABENCH_CACHE_DIR", str(tmp_path / "cache"))
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def box_quadratic() -> tuple[np.ndarray, np.ndarray, BoxSet]:
    H = np.array([[2.0, 0.5, 0.0], [0.5, 1.5, 0.2], [0.0, 0.2, 1.0]])
    h = np.array([-1.0, 0.8, -0.3])
    return H, h, BoxSet.uniform(3, -0.5, 0.5)


@pytest.fixture
def box_split(box_quadratic) -> SplitProblem:
    """min f(x) + ι_box(z) s.t. x − z = 0 with a strongly convex quadratic f."""
    H, h, box = box_quadratic
    return SplitProblem(f=QuadraticFn(H, h), g=Indicator(box), A=np.eye(3), B=-np.eye(3), c=np.zeros(3))


@pytest.fixture(scope="session")
def tiny_generated():
    """(instance, record) of a 3-agent instance with scalar inputs and horizon 3."""
    return generate_random_instance(GeneratorParams(**TINY_PARAMS))


@pytest.fixture
def tiny_instance(tiny_generated):
    return tiny_generated[0]


@pytest.fixture
def instance_file(tmp_path, tiny_generated):
    path = tmp_path / "tiny.json"
    save_instance(tiny_generated[1], path)
    return path
