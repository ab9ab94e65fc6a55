"""Inexact PGM/APGM runs and their complexity bounds."""

import numpy as np
import pytest

from amabench.errors import ConfigError, StepSizeError
from amabench.models import ErrorSchedule, Indicator, QuadraticFn, minimize_quadratic
from amabench.services import (
    apgm_bound,
    default_step,
    pgm_bound_convex,
    pgm_bound_strongly_convex,
    pgm_trace_rows,
    run_inexact_apgm,
    run_inexact_pgm,
)
from amabench.services.inexact_pgm import contraction_sum, momentum_weight

ZERO = ErrorSchedule()


@pytest.fixture
def composite(box_quadratic):
    """φ smooth quadratic, ψ box indicator, with the constrained minimizer."""
    H, h, box = box_quadratic
    phi, psi = QuadraticFn(H, h), Indicator(box)
    w_star = minimize_quadratic(H, h, box)
    return phi, psi, w_star, phi.value(w_star)


def test_momentum_weight():
    assert momentum_weight(1) == 0.0
    assert momentum_weight(2) == pytest.approx(0.25)
    assert momentum_weight(10) == pytest.approx(9 / 12)


def test_step_size_must_be_below_inverse_lipschitz(composite):
    phi, psi, _, _ = composite
    with pytest.raises(StepSizeError):
        run_inexact_pgm(phi, psi, np.zeros(3), 1.0 / phi.lipschitz, 5, ZERO, ZERO)
    with pytest.raises(StepSizeError):
        run_inexact_apgm(phi, psi, np.zeros(3), -0.1, 5, ZERO, ZERO)


def test_negative_iteration_count_is_rejected(composite):
    phi, psi, _, _ = composite
    with pytest.raises(ConfigError):
        run_inexact_pgm(phi, psi, np.zeros(3), default_step(phi.lipschitz), -1, ZERO, ZERO)


def test_exact_pgm_converges_to_constrained_minimizer(composite):
    phi, psi, w_star, _ = composite
    trace = run_inexact_pgm(phi, psi, np.zeros(3), default_step(phi.lipschitz), 400, ZERO, ZERO)
    np.testing.assert_allclose(trace.iterates[-1], w_star, atol=1e-8)
    assert trace.e_norms == [0.0] * 400
    assert trace.eps == [0.0] * 400


def test_zero_iterations_give_empty_trace(composite):
    phi, psi, _, _ = composite
    trace = run_inexact_pgm(phi, psi, np.zeros(3), default_step(phi.lipschitz), 0, ZERO, ZERO)
    assert trace.K == 0


@pytest.mark.parametrize("schedules", [
    (ZERO, ZERO),
    (ErrorSchedule.parse("power:0.5:2"), ZERO),
    (ErrorSchedule.parse("geometric:0.3:0.8"), ZERO),
])
def test_pgm_bounds_hold_along_the_run(composite, schedules):
    phi, psi, w_star, obj_star = composite
    tau = default_step(phi.lipschitz)
    trace = run_inexact_pgm(phi, psi, np.zeros(3), tau, 60, *schedules, rng_seed=4)
    rows = pgm_trace_rows(trace, w_star, obj_star, phi.lipschitz, phi.sigma)
    for row in rows:
        assert row["obj_gap"] <= row["bound_p1"] * (1 + 1e-9) + 1e-12
        assert row["dist_to_opt"] <= row["bound_p3"] * (1 + 1e-9) + 1e-12
        assert "bound_p2" not in row


@pytest.mark.parametrize("schedules", [
    (ZERO, ZERO),
    (ErrorSchedule.parse("power:0.5:3"), ErrorSchedule.parse("power:1e-6:4")),
])
def test_apgm_last_iterate_bound_holds(composite, schedules):
    phi, psi, w_star, obj_star = composite
    trace = run_inexact_apgm(phi, psi, np.zeros(3), default_step(phi.lipschitz), 60, *schedules, rng_seed=9)
    rows = pgm_trace_rows(trace, w_star, obj_star, phi.lipschitz)
    for row in rows:
        assert row["obj_gap_last"] <= row["bound_p2"] * (1 + 1e-9) + 1e-12
        assert set(row) >= {"bound_p2"} and "bound_p1" not in row


def test_apgm_matches_pgm_until_momentum_kicks_in(composite):
    phi, psi, _, _ = composite
    tau = default_step(phi.lipschitz)
    w0 = np.array([0.4, -0.4, 0.2])
    pgm = run_inexact_pgm(phi, psi, w0, tau, 3, ZERO, ZERO)
    apgm = run_inexact_apgm(phi, psi, w0, tau, 3, ZERO, ZERO)
    np.testing.assert_allclose(apgm.iterates[0], pgm.iterates[0])
    np.testing.assert_allclose(apgm.iterates[1], pgm.iterates[1])
    assert np.linalg.norm(apgm.iterates[2] - pgm.iterates[2]) > 1e-8


def test_same_seed_reproduces_run(composite):
    phi, psi, _, _ = composite
    tau = default_step(phi.lipschitz)
    sched = ErrorSchedule.parse("constant:0.1")
    a = run_inexact_pgm(phi, psi, np.zeros(3), tau, 10, sched, sched, rng_seed=5)
    b = run_inexact_pgm(phi, psi, np.zeros(3), tau, 10, sched, sched, rng_seed=5)
    np.testing.assert_array_equal(np.array(a.iterates), np.array(b.iterates))


def test_injected_gradient_errors_have_scheduled_norm(composite):
    phi, psi, _, _ = composite
    sched = ErrorSchedule.parse("power:0.2:1")
    trace = run_inexact_pgm(phi, psi, np.zeros(3), default_step(phi.lipschitz), 5, sched, ZERO, rng_seed=1)
    np.testing.assert_allclose(trace.e_norms, [0.2 / k for k in range(1, 6)])


def test_zero_error_bounds_reduce_to_classical_rates():
    L, d0 = 4.0, 2.0
    assert pgm_bound_convex(5, L, d0, [0.0] * 5, [0.0] * 5) == pytest.approx(L * d0 ** 2 / 10)
    assert apgm_bound(5, L, d0, [0.0] * 5, [0.0] * 5) == pytest.approx(2 * L * d0 ** 2 / 36)
    assert pgm_bound_strongly_convex(3, L, 1.0, d0, [0.0] * 3, [0.0] * 3) == pytest.approx(0.75 ** 3 * d0)


def test_step_aware_contraction_uses_tau_sigma():
    bound = pgm_bound_strongly_convex(2, 4.0, 1.0, 1.0, [0.0, 0.0], [0.0, 0.0], tau=0.2)
    assert bound == pytest.approx(0.8 ** 2)


def test_strongly_convex_bound_rejects_sigma_above_lipschitz():
    with pytest.raises(ConfigError):
        pgm_bound_strongly_convex(1, 1.0, 2.0, 1.0, [0.0], [0.0])


def test_bounds_need_enough_error_terms():
    with pytest.raises(ConfigError):
        pgm_bound_convex(4, 1.0, 1.0, [0.0] * 3, [0.0] * 3)
    with pytest.raises(ConfigError):
        apgm_bound(0, 1.0, 1.0, [], [])


def test_contraction_sum_matches_recursion():
    gamma, d0 = 0.3, 2.0
    terms = np.array([0.5, 0.1, 0.2, 0.05])
    closed = contraction_sum(4, gamma, d0, terms)
    manual = (1 - gamma) ** 4 * d0 + sum((1 - gamma) ** (4 - p) * terms[p - 1] for p in range(1, 5))
    assert closed == pytest.approx(manual)
    assert contraction_sum(2, 1.0, d0, terms) == pytest.approx(terms[1])


def test_contraction_sum_at_full_contraction_keeps_last_term():
    assert contraction_sum(3, 1.0, 5.0, np.array([1.0, 2.0, 3.0])) == pytest.approx(3.0)


def test_box_bound_grows_with_errors():
    clean = pgm_bound_convex(10, 2.0, 1.0, [0.0] * 10, [0.0] * 10)
    noisy = pgm_bound_convex(10, 2.0, 1.0, [0.1] * 10, [0.01] * 10)
    assert noisy > clean
