"""Schemas, instance files, trace CSVs and sets."""

import numpy as np
import pytest
from pydantic import ValidationError

from amabench.errors import ConfigError, DimensionError, DisconnectedGraphError
from amabench.models import (
    AMA_COLUMNS,
    AffineSet,
    BoxSet,
    DecreaseFunction,
    ErrorSchedule,
    ExperimentConfig,
    GeneratorParams,
    Network,
    SelectionMap,
    content_hash,
    load_instance,
    read_csv,
    solve_box_qp,
    write_csv,
)


@pytest.mark.parametrize("text, k, expected", [
    ("zero", 3, 0.0),
    ("constant:0.5", 7, 0.5),
    ("power:2:2", 4, 0.125),
    ("geometric:1:0.5", 3, 0.125),
])
def test_error_schedule_magnitudes(text, k, expected):
    schedule = ErrorSchedule.parse(text)
    assert schedule.magnitude(k) == pytest.approx(expected)
    assert ErrorSchedule.parse(schedule.label()) == schedule


@pytest.mark.parametrize("text", ["power:1", "geometric:1:1.5", "sine:1", "constant:-1"])
def test_error_schedule_rejects_bad_text(text):
    with pytest.raises((ValueError, ValidationError)):
        ErrorSchedule.parse(text)


def test_decrease_function():
    alpha = DecreaseFunction.parse("power:1", alpha0=2.0)
    assert [alpha.value(k) for k in range(4)] == pytest.approx([2.0, 2.0, 1.0, 2.0 / 3])
    geometric = DecreaseFunction.parse("geometric:0.5", alpha0=1.0)
    assert geometric.value(3) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        DecreaseFunction.parse("power:1").value(1)


def test_experiment_config_modes(tmp_path):
    base = dict(instance=tmp_path / "i.json", output=tmp_path / "o.csv")
    with pytest.raises(ValidationError):
        ExperimentConfig(**base, algorithm="ama", certified=DecreaseFunction(alpha0=1.0))
    with pytest.raises(ValidationError):
        ExperimentConfig(**base, algorithm="dist-fama", theta=ErrorSchedule.parse("constant:1"))
    with pytest.raises(ValidationError):
        ExperimentConfig(**base, certified=DecreaseFunction(alpha0=1.0), delta=ErrorSchedule.parse("constant:1"))
    assert ExperimentConfig(**base, algorithm="ama", theta=ErrorSchedule.parse("constant:1")).K == 500


def test_generator_params_validation():
    with pytest.raises(ValidationError):
        GeneratorParams(neighbor_min=3, neighbor_max=2)
    with pytest.raises(ValidationError):
        GeneratorParams(M=0)


def test_network_neighbors_include_self():
    network = Network(3, [(0, 1), (2, 1)])
    assert network.neighbors == ((0, 1), (0, 1, 2), (1, 2))
    assert network.edges == [(0, 1), (1, 2)]
    assert network.degree(1) == 3
    with pytest.raises(ConfigError):
        Network(2, [(0, 5)])


def test_disconnected_network_is_reported():
    with pytest.raises(DisconnectedGraphError):
        Network(3, [(0, 1)]).require_connected()


def test_selection_maps():
    maps = SelectionMap(Network(3, [(0, 1), (1, 2)]), [1, 2, 1])
    assert maps.n_v == 4 and maps.n_z == 3 + 4 + 3
    np.testing.assert_array_equal(maps.multiplicity(), [2, 3, 3, 2])
    v = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(maps.E(1) @ v, maps.gather(1, v))
    np.testing.assert_array_equal(maps.scatter([maps.gather(i, v) for i in range(3)]), v * maps.multiplicity())
    maps.check_consistency()
    with pytest.raises(ConfigError):
        maps.local_slice(0, 2)


def test_sets():
    box = BoxSet([-1.0, 0.0], [1.0, 2.0])
    np.testing.assert_array_equal(box.project(np.array([3.0, -1.0])), [1.0, 0.0])
    assert box.contains(np.array([1.0 + 1e-12, 2.0]))
    assert box.support(np.array([1.0, -1.0])) == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        BoxSet([0.0], [1.0, 2.0])
    plane = AffineSet([[1.0, 1.0]], [1.0])
    np.testing.assert_allclose(plane.project(np.zeros(2)), [0.5, 0.5])
    with pytest.raises(ConfigError):
        AffineSet([[1.0, 1.0], [1.0, 1.0]], [0.0, 1.0])


def test_box_qp_solver_satisfies_kkt(box_quadratic):
    H, h, box = box_quadratic
    x = solve_box_qp(H, h, box.lower, box.upper)
    grad = H @ x + h
    assert box.contains(x)
    for xi, gi, lo, hi in zip(x, grad, box.lower, box.upper):
        if lo + 1e-9 < xi < hi - 1e-9:
            assert abs(gi) <= 1e-9
        elif xi <= lo + 1e-9:
            assert gi >= -1e-9
        else:
            assert gi <= 1e-9


def test_csv_roundtrip_with_header(tmp_path):
    path = tmp_path / "trace.csv"
    rows = [{"k": 1, "dual_gap_avg": 0.5, "u_err": float("nan")}, {"k": 2, "dual_gap_avg": 0.25}]
    assert write_csv(path, AMA_COLUMNS, rows, {"algorithm": "ama", "tau": 0.1}) == 2
    meta, columns, back = read_csv(path)
    assert meta["algorithm"] == "ama" and meta["schema_version"] == "1"
    assert columns == AMA_COLUMNS
    assert back[1]["dual_gap_avg"] == 0.25 and back[0]["u_err"] is None


def test_csv_rejects_unknown_columns(tmp_path):
    with pytest.raises(ConfigError):
        write_csv(tmp_path / "x.csv", ["k"], [{"k": 1, "extra": 2}])


def test_instance_file_hash_and_validation(tmp_path, instance_file):
    _, record, digest = load_instance(instance_file)
    assert digest == content_hash(instance_file)
    assert record.mpc is not None and record.generator is not None
    broken = tmp_path / "broken.json"
    broken.write_text('{"M": 2}')
    with pytest.raises(ConfigError):
        load_instance(broken)
    with pytest.raises(ConfigError):
        load_instance(tmp_path / "absent.json")


def test_instance_with_inconsistent_box_is_rejected(tmp_path, instance_file):
    _, record, _ = load_instance(instance_file)
    record.agents[0].box_upper[0] += 1.0
    path = tmp_path / "edited.json"
    path.write_text(record.model_dump_json())
    with pytest.raises(ConfigError):
        load_instance(path)
