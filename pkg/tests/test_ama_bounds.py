"""AMA/FAMA bound calculators, the schedule classifier and the series estimate."""

import numpy as np
import pytest

from amabench.errors import ConfigError, RankDeficiencyError
from amabench.models import AffineSet, BoxSet, ErrorSchedule, Indicator, L1Norm, QuadraticFn, SplitProblem, ZeroFunction
from amabench.services import (
    ama_bounded_error_bound,
    ama_dual_bound,
    ama_linear_bound,
    classify_schedule,
    fama_bound,
    fama_bounded_error_bound,
    geometric_harmonic_series,
    lipschitz_psi,
)
from amabench.services.ama_bounds import dual_conditioning


def zeros(k):
    return [0.0] * k


def test_zero_error_bounds_reduce_to_exact_rates():
    L, d0, tau = 3.0, 1.5, 0.3
    assert ama_dual_bound(8, L, d0, 1.0, 1.0, tau, 2.0, zeros(8), zeros(8)) == pytest.approx(L * d0 ** 2 / 16)
    assert fama_bound(8, L, d0, 1.0, 1.0, tau, 2.0, zeros(8), zeros(8)) == pytest.approx(2 * L * d0 ** 2 / 81)


def test_linear_bound_contracts_at_the_dual_condition_number():
    H = np.diag([1.0, 4.0])
    # A H⁻¹ Aᵀ = diag(1, 1/4): γ = 1/4
    bound = ama_linear_bound(3, H, 1.0, 0.5, 0.0, 2.0, zeros(3), zeros(3))
    assert bound == pytest.approx(0.75 ** 3 * 2.0)
    stepped = ama_linear_bound(3, H, 1.0, 0.5, 0.0, 2.0, zeros(3), zeros(3), step_aware=True)
    assert stepped == pytest.approx((1 - 0.5 * 0.25) ** 3 * 2.0)


def test_bounded_error_bound_adds_the_neighborhood_radius():
    H = np.eye(2)
    bound = ama_bounded_error_bound(5, H, 1.0, 0.5, 0.0, 1.0, 0.2, 0.0)
    # γ = 1, L = 1: Δ = 0.2
    assert bound == pytest.approx(0.2)


def test_fama_bounded_errors_are_flagged_as_divergent():
    bound, diverges = fama_bounded_error_bound(10, 2.0, 1.0, 1.0, 1.0, 0.4, 1.0, 0.1, 0.0)
    assert diverges
    assert bound == pytest.approx((4.0 / 11 + 10 * 0.05) ** 2)
    clean, clean_diverges = fama_bounded_error_bound(10, 2.0, 1.0, 1.0, 1.0, 0.4, 1.0, 0.0, 0.0)
    assert not clean_diverges
    assert clean == pytest.approx((4.0 / 11) ** 2)


def test_error_norms_are_scaled_by_operator_norms():
    a = [0.1, 0.2]
    raw = ama_dual_bound(2, 1.0, 1.0, 2.0 * np.eye(2), 1.0, 0.5, 0.0, a, zeros(2))
    mapped = ama_dual_bound(2, 1.0, 1.0, 1.0, 1.0, 0.5, 0.0, [0.2, 0.4], zeros(2), mapped_norms=True)
    assert raw == pytest.approx(mapped)


def test_theta_errors_with_infinite_psi_lipschitz_vanish_when_zero():
    finite = ama_dual_bound(3, 1.0, 1.0, 1.0, 1.0, 0.5, np.inf, zeros(3), zeros(3))
    assert np.isfinite(finite)


def test_rank_deficient_coupling_is_rejected():
    with pytest.raises(RankDeficiencyError):
        dual_conditioning(np.eye(2), np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_bounds_require_k_at_least_one():
    with pytest.raises(ConfigError):
        ama_dual_bound(0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.0, [], [])
    with pytest.raises(ConfigError):
        fama_bound(3, 1.0, 1.0, 1.0, 1.0, 0.5, 0.0, [0.0], [0.0])


@pytest.mark.parametrize("delta, theta, algorithm, quadratic, expected", [
    ("zero", "zero", "ama", False, "yes"),
    ("power:1:2", "zero", "ama", False, "yes"),
    ("power:1:1", "zero", "ama", False, "not-guaranteed"),
    ("power:1:1", "zero", "ama", True, "yes"),
    ("power:1:0.5", "zero", "ama", True, "yes-to-neighborhood"),
    ("constant:0.1", "zero", "ama", True, "yes-to-neighborhood"),
    ("geometric:1:0.9", "geometric:1:0.5", "fama", False, "yes"),
    ("power:1:3", "zero", "fama", False, "yes"),
    ("power:1:2", "zero", "fama", True, "not-guaranteed"),
    ("constant:0.1", "zero", "fama", True, "not-guaranteed"),
    ("geometric:1:0.5", "constant:0.1", "ama", True, "yes-to-neighborhood"),
])
def test_classify_schedule(delta, theta, algorithm, quadratic, expected):
    verdict = classify_schedule(ErrorSchedule.parse(delta), ErrorSchedule.parse(theta), algorithm, quadratic, True)
    assert verdict.converges == expected
    assert verdict.rationale


def test_classify_schedule_with_unbounded_psi():
    verdict = classify_schedule(ErrorSchedule(), ErrorSchedule(), "ama", True, False)
    assert verdict.converges == "not-guaranteed"


def test_classify_schedule_rejects_other_algorithms():
    with pytest.raises(ConfigError):
        classify_schedule(ErrorSchedule(), ErrorSchedule(), "pgm", True, True)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_series_upper_bound_and_decay(alpha):
    for k in (1, 2, 5, 20, 50, 200, 500):
        estimate = geometric_harmonic_series(alpha, k)
        assert estimate.value <= estimate.upper_bound * (1 + 1e-12)
        assert estimate.value == pytest.approx(sum(alpha ** (k - p) / p for p in range(1, k + 1)))
    reference = 50 * geometric_harmonic_series(alpha, 50).value
    for k in (50, 100, 250, 500):
        assert k * geometric_harmonic_series(alpha, k).value <= 3 * reference


def test_series_rejects_bad_arguments():
    with pytest.raises(ConfigError):
        geometric_harmonic_series(1.0, 5)
    with pytest.raises(ConfigError):
        geometric_harmonic_series(0.5, 0)


def test_lipschitz_psi_of_bounded_box_is_its_support_bound(box_split):
    L_psi, regime = lipschitz_psi(box_split, [])
    assert regime == "support"
    assert L_psi == pytest.approx(np.sqrt(3 * 0.25))


def _split_with(g, B, c=None):
    n = B.shape[0]
    return SplitProblem(f=QuadraticFn(np.eye(n)), g=g, A=np.eye(n), B=B, c=np.zeros(n) if c is None else c)


def test_lipschitz_psi_of_zero_function_depends_on_feasibility():
    p = _split_with(ZeroFunction(1), np.ones((2, 1)), c=np.array([3.0, 4.0]))
    assert lipschitz_psi(p, [np.array([1.0, -1.0])]) == (5.0, "indicator-feasible")
    L_psi, regime = lipschitz_psi(p, [np.array([1.0, 1.0])])
    assert regime == "indicator-infeasible" and L_psi == np.inf


def test_lipschitz_psi_of_l1_checks_the_dual_ball():
    p = _split_with(L1Norm(2, weight=0.5), np.eye(2))
    assert lipschitz_psi(p, [np.array([0.5, -0.2])])[1] == "indicator-feasible"
    assert lipschitz_psi(p, [np.array([0.7, 0.0])])[1] == "indicator-infeasible"


def test_lipschitz_psi_of_affine_indicator():
    g = Indicator(AffineSet(np.array([[1.0, 1.0]]), np.array([1.0])))
    p = _split_with(g, np.eye(2))
    assert lipschitz_psi(p, [np.array([2.0, 2.0])])[1] == "indicator-feasible"
    assert lipschitz_psi(p, [np.array([1.0, 0.0])])[1] == "indicator-infeasible"


def test_lipschitz_psi_of_smooth_g_is_unbounded():
    p = _split_with(QuadraticFn(np.eye(2)), np.eye(2))
    assert lipschitz_psi(p, []) == (np.inf, "unbounded")


def test_unbounded_box_is_not_a_support_bound():
    p = _split_with(Indicator(BoxSet.unbounded(2)), np.eye(2))
    assert lipschitz_psi(p, [np.zeros(2)])[1] == "indicator-feasible"
