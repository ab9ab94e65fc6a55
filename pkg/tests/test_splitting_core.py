"""Prox operators, the dual pair and the dual function."""

import numpy as np
import pytest

from amabench.errors import StepSizeError
from amabench.models import BoxSet, Indicator, L1Norm, QuadraticFn, SplitProblem, ZeroFunction, minimize_quadratic
from amabench.services import (
    DUAL_UNBOUNDED,
    DualNonsmooth,
    DualSmooth,
    augmented_z_step,
    dual_objectives,
    dual_value,
    prox,
    prox_inexact,
    prox_objective,
)


def test_prox_of_box_indicator_is_clipping():
    g = Indicator(BoxSet.uniform(3, -1.0, 1.0))
    np.testing.assert_array_equal(prox(g, np.array([2.0, -0.3, -5.0]), 0.7), [1.0, -0.3, -1.0])


def test_prox_of_l1_soft_thresholds():
    np.testing.assert_allclose(prox(L1Norm(2), np.array([3.0, -0.5]), 1.0), [2.0, 0.0])


def test_prox_rejects_nonpositive_step():
    with pytest.raises(StepSizeError):
        prox(ZeroFunction(2), np.zeros(2), 0.0)


def test_prox_of_quadratic_solves_optimality_condition(box_quadratic):
    H, h, _ = box_quadratic
    g, v, tau = QuadraticFn(H, h), np.array([0.3, -1.0, 2.0]), 0.4
    w = prox(g, v, tau)
    np.testing.assert_allclose(tau * (H @ w + h) + w - v, 0.0, atol=1e-12)


def test_prox_inexact_with_zero_error_is_exact(box_quadratic):
    H, h, _ = box_quadratic
    g = QuadraticFn(H, h)
    result = prox_inexact(g, np.ones(3), 0.5, 0.0)
    np.testing.assert_allclose(result.point, prox(g, np.ones(3), 0.5))
    assert result.epsilon == 0.0


@pytest.mark.parametrize("epsilon", [1e-6, 1e-3, 0.1])
def test_prox_inexact_gap_stays_within_epsilon(box_quadratic, epsilon):
    H, h, box = box_quadratic
    g = QuadraticFn(H, h, domain=box)
    v, tau = np.array([0.9, -0.2, 0.1]), 0.8
    exact = prox(g, v, tau)
    result = prox_inexact(g, v, tau, epsilon, rng=np.random.default_rng(3))
    gap = prox_objective(g, v, tau, result.point) - prox_objective(g, v, tau, exact)
    assert box.contains(result.point)
    assert gap <= epsilon * (1 + 1e-9)
    assert result.epsilon == pytest.approx(max(gap, 0.0), abs=1e-12)


def test_prox_inexact_reaches_requested_gap_without_domain(box_quadratic):
    H, h, _ = box_quadratic
    g = QuadraticFn(H, h)
    result = prox_inexact(g, np.zeros(3), 1.0, 1e-2, rng=np.random.default_rng(0))
    assert 0.2e-2 <= result.epsilon <= 1e-2 * (1 + 1e-9)


def test_z_step_for_box_indicator_projects(box_split):
    w = np.array([0.9, -0.1, -2.0])
    # B = −I: argmin ι_box(z) + (τ/2)‖−z − w‖² = Proj_box(−w)
    np.testing.assert_allclose(augmented_z_step(box_split, w, 2.0), [-0.5, 0.1, 0.5])


def test_dual_smooth_lipschitz_for_identity_coupling(box_split, box_quadratic):
    H, _, _ = box_quadratic
    phi = DualSmooth(box_split)
    assert phi.lipschitz == pytest.approx(1.0 / np.linalg.eigvalsh(H)[0])
    assert phi.quadratic_assumption
    assert phi.sigma == pytest.approx(1.0 / np.linalg.eigvalsh(H)[-1])


def test_dual_smooth_gradient_matches_finite_differences(box_split):
    phi = DualSmooth(box_split)
    lam, step = np.array([0.2, -0.4, 1.1]), 1e-5
    numeric = np.array([
        (phi.value(lam + step * e) - phi.value(lam - step * e)) / (2 * step) for e in np.eye(3)
    ])
    np.testing.assert_allclose(phi.gradient(lam), numeric, atol=1e-6)


def test_weak_duality(box_split, box_quadratic):
    H, h, box = box_quadratic
    x = minimize_quadratic(H, h, box)
    primal = 0.5 * x @ H @ x + h @ x
    rng = np.random.default_rng(11)
    for _ in range(20):
        assert dual_value(box_split, rng.standard_normal(3)) <= primal + 1e-12


def test_dual_value_is_minus_the_dual_pair(box_split):
    phi, psi = dual_objectives(box_split)
    lam = np.array([0.3, 0.1, -0.7])
    assert dual_value(box_split, lam) == pytest.approx(-phi.value(lam) - psi.value(lam), abs=1e-12)


def test_dual_unbounded_outside_domain_of_zero_g():
    p = SplitProblem(f=QuadraticFn(np.eye(2)), g=ZeroFunction(1), A=np.eye(2), B=np.ones((2, 1)), c=np.zeros(2))
    assert dual_value(p, np.array([1.0, 0.5])) == DUAL_UNBOUNDED
    assert dual_value(p, np.array([1.0, -1.0])) > DUAL_UNBOUNDED


def test_domain_projector_of_zero_g_enforces_null_condition():
    B = np.array([[1.0], [1.0], [0.0]])
    p = SplitProblem(f=QuadraticFn(np.eye(3)), g=ZeroFunction(1), A=np.eye(3), B=B, c=np.zeros(3))
    project = DualNonsmooth(p).domain_projector()
    lam = project(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(B.T @ lam, 0.0, atol=1e-14)
    np.testing.assert_allclose(lam, [-0.5, 0.5, 3.0])


def test_dual_nonsmooth_prox_matches_z_step(box_split):
    psi = DualNonsmooth(box_split)
    u, tau = np.array([0.4, -1.0, 0.25]), 0.6
    z = psi.z_step(u, tau)
    np.testing.assert_allclose(psi.prox(u, tau), u + tau * (box_split.c + z))
