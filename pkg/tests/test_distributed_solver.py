"""Distributed AMA/FAMA over the agent graph."""

import numpy as np
import pytest

from amabench.errors import CommunicationError, ConfigError, StepSizeError
from amabench.models import ErrorSchedule, Network, SelectionMap
from amabench.services import (
    DistributedConstants,
    ExactLocalSolver,
    NeighborExchange,
    PerturbedLocalSolver,
    build_split,
    check_null_multiplier,
    consensus,
    default_distributed_step,
    distributed_bound,
    distributed_trace_rows,
    run_distributed_ifama,
    run_distributed_iama,
    run_inexact_ama,
    run_inexact_fama,
)
from amabench.services.reference_service import compute_reference

DELTA = ErrorSchedule.parse("power:0.05:2")


@pytest.fixture(scope="module")
def tiny_reference(tiny_generated):
    return compute_reference(tiny_generated[0], 20_000)


def test_selection_maps_roundtrip_through_consensus():
    network = Network(3, [(0, 1), (1, 2)])
    maps = SelectionMap(network, [2, 1, 2])
    v = np.arange(5.0)
    np.testing.assert_array_equal(consensus([maps.gather(i, v) for i in range(3)], maps), v)


def test_exchange_refuses_reads_from_non_neighbors():
    exchange = NeighborExchange(Network(3, [(0, 1), (1, 2)]))
    exchange.publish(2, "z", np.zeros(1))
    with pytest.raises(CommunicationError):
        exchange.read(0, 2, "z")
    assert exchange.read(1, 2, "z").shape == (1,)


@pytest.mark.parametrize("runner", [run_distributed_iama, run_distributed_ifama])
def test_multipliers_stay_in_the_null_space(tiny_instance, runner):
    tau = default_distributed_step(tiny_instance)
    trace = runner(tiny_instance, ExactLocalSolver(tiny_instance), tau, 60, record_dual=False)
    assert max(trace.ET_lambda_inf) <= 1e-10
    assert check_null_multiplier(trace.lam[-1], tiny_instance.maps) <= 1e-10


@pytest.mark.parametrize("distributed, centralized", [
    (run_distributed_iama, run_inexact_ama),
    (run_distributed_ifama, run_inexact_fama),
])
@pytest.mark.parametrize("delta", [ErrorSchedule(), DELTA])
def test_distributed_run_matches_centralized_run(tiny_instance, distributed, centralized, delta):
    tau = default_distributed_step(tiny_instance)
    split = build_split(tiny_instance.agents, tiny_instance.network, tiny_instance.maps)
    if delta.is_zero:
        local = ExactLocalSolver(tiny_instance)
    else:
        local = PerturbedLocalSolver(tiny_instance, delta, seed=8)
    dist = distributed(tiny_instance, local, tau, 40, record_dual=False)
    cent = centralized(split, np.zeros(split.n_c), tau, 40, delta, ErrorSchedule(), rng_seed=8, record_dual=False)
    for k in range(40):
        np.testing.assert_allclose(dist.lam[k], cent.lam[k], atol=1e-10)
        np.testing.assert_allclose(dist.z[k], cent.z[k], atol=1e-10)
        np.testing.assert_allclose(dist.x[k], cent.x[k], atol=1e-10)


def test_reads_happen_only_along_edges(tiny_instance):
    exchange = NeighborExchange(tiny_instance.network, record=True)
    tau = default_distributed_step(tiny_instance)
    run_distributed_iama(tiny_instance, ExactLocalSolver(tiny_instance), tau, 5, record_dual=False, exchange=exchange)
    assert exchange.reads
    neighbors = tiny_instance.network.neighbors
    assert all(owner in neighbors[reader] for reader, owner, _ in exchange.reads)


def test_thread_count_does_not_change_the_trace(tiny_instance):
    tau = default_distributed_step(tiny_instance)
    runs = [
        run_distributed_ifama(tiny_instance, PerturbedLocalSolver(tiny_instance, DELTA, seed=3), tau, 25,
                              threads=threads, record_dual=False)
        for threads in (1, 3)
    ]
    np.testing.assert_array_equal(np.array(runs[0].lam), np.array(runs[1].lam))
    np.testing.assert_array_equal(np.array(runs[0].u), np.array(runs[1].u))


def test_step_size_must_stay_below_smallest_local_curvature(tiny_instance):
    with pytest.raises(StepSizeError):
        run_distributed_iama(tiny_instance, ExactLocalSolver(tiny_instance), tiny_instance.sigma_min, 3)


def test_perturbed_solver_stays_feasible(tiny_instance):
    tau = default_distributed_step(tiny_instance)
    local = PerturbedLocalSolver(tiny_instance, ErrorSchedule.parse("constant:1.0"), seed=0)
    trace = run_distributed_iama(tiny_instance, local, tau, 10, record_dual=False)
    assert all(n <= 1.0 + 1e-12 for n in trace.delta_norms)
    assert trace.K == 10


@pytest.mark.parametrize("runner, pairs", [
    (run_distributed_iama, [("bound_cor6", "dual_gap_avg"), ("bound_thm1", "dual_gap_avg")]),
    (run_distributed_ifama, [("bound_cor8", "dual_gap_last"), ("bound_cor8_nom", "dual_gap_last"),
                             ("bound_thm4", "dual_gap_last")]),
])
@pytest.mark.parametrize("delta", [ErrorSchedule(), ErrorSchedule.parse("power:0.05:3")])
def test_distributed_bounds_hold(tiny_instance, tiny_reference, runner, pairs, delta):
    tau = default_distributed_step(tiny_instance)
    local = ExactLocalSolver(tiny_instance) if delta.is_zero else PerturbedLocalSolver(tiny_instance, delta, 1)
    trace = runner(tiny_instance, local, tau, 60)
    rows = distributed_trace_rows(tiny_instance, trace, np.array(tiny_reference.lambda_star),
                                  tiny_reference.dual_optimum, np.array(tiny_reference.u_star))
    for row in rows:
        for bound, measured in pairs:
            assert row[measured] <= row[bound] + 1e-9 * max(1.0, abs(row[bound]))
    assert rows[-1]["u_err"] < rows[0]["u_err"]


def test_linear_bound_variants_at_zero_error():
    constants = DistributedConstants(L=2.0, dist0=1.0, gamma=0.25, M=3)
    zeros = [0.0] * 4
    assert distributed_bound(4, "cor7", constants, zeros) == pytest.approx(0.75 ** 5)
    assert distributed_bound(4, "cor7_thm2", constants, zeros) == pytest.approx(0.75 ** 4)
    assert distributed_bound(4, "cor6", constants, zeros) == pytest.approx(2.0 / 8)


def test_sublinear_bound_divides_by_k():
    constants = DistributedConstants(L=1.0, dist0=0.0, gamma=0.5, M=2)
    assert distributed_bound(2, "cor6", constants, [1.0, 0.25]) == pytest.approx(2.5 ** 2 / 4)
    assert distributed_bound(1, "cor6", constants, [1.0]) == pytest.approx(2.0)


def test_network_factor_only_enters_cor8():
    constants = DistributedConstants(L=2.0, dist0=1.0, gamma=0.25, M=3)
    errors = [0.1, 0.1]
    with_m = distributed_bound(2, "cor8", constants, errors)
    without = distributed_bound(2, "cor8_nom", constants, errors)
    assert with_m == pytest.approx(4.0 / 9 * (1.0 + 2 * 3 * 0.3 / 2.0) ** 2)
    assert without == pytest.approx(4.0 / 9 * (1.0 + 2 * 0.3 / 2.0) ** 2)


def test_unknown_bound_variant_is_rejected():
    with pytest.raises(ConfigError):
        distributed_bound(1, "cor9", DistributedConstants(1.0, 1.0, 0.5, 2), [0.0])


def test_constants_from_instance(tiny_instance):
    sigmas = [a.sigma for a in tiny_instance.agents]
    lips = [a.lipschitz for a in tiny_instance.agents]
    printed = DistributedConstants.from_instance(tiny_instance, 1.0)
    assert printed.L == pytest.approx(1.0 / min(sigmas))
    assert printed.gamma == pytest.approx(min(sigmas) / max(lips))
    stepped = DistributedConstants.from_instance(tiny_instance, 1.0, tau=0.5 * min(sigmas))
    assert stepped.gamma == pytest.approx(0.5 * min(sigmas) / max(lips))
