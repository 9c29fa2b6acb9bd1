import numpy as np
import pytest

import rmablab.whittle as whittle_mod
from oracle import exact_q_star, exact_whittle_indices
from rmablab.arms import ArmModel, circulant_arm, make_homogeneous_target_scenario, smart_target_arm
from rmablab.whittle import (
    NumericFailure,
    SubsidizedArm,
    audit_strong_indexability,
    d_gap,
    lagrangian_value,
    solve_subsidized,
    whittle_index,
)


def _random_arm(rng, n_states=3):
    return ArmModel(
        n_states,
        rng.dirichlet(np.ones(n_states), size=n_states),
        rng.dirichlet(np.ones(n_states), size=n_states),
        rng.normal(size=(n_states, 2)),
    )


def _bellman_residual(arm, subsidy, discount, q):
    r = np.array(arm.reward)
    r[:, 0] += subsidy
    v = q.max(axis=1)
    q_next = r + discount * np.stack((arm.kernel_passive @ v, arm.kernel_active @ v), axis=1)
    return np.abs(q_next - q).max()


def test_solve_zero_rewards_gives_zero_values():
    arm = ArmModel(3, np.eye(3), np.eye(3), np.zeros((3, 2)))
    vf = solve_subsidized(SubsidizedArm(arm, 0.0, 0.5), 1e-8)
    assert np.allclose(vf.q, 0.0, atol=1e-8)
    assert np.allclose(vf.v, 0.0, atol=1e-8)


def test_solve_single_state_geometric_series():
    arm = ArmModel(1, [[1.0]], [[1.0]], [[1.0, 0.0]])
    vf = solve_subsidized(SubsidizedArm(arm, 0.0, 0.5), 1e-9)
    assert vf.v[0] == pytest.approx(2.0, abs=1e-7)


def test_solve_matches_policy_enumeration_oracle():
    rng = np.random.default_rng(123)
    for _ in range(5):
        arm = _random_arm(rng)
        for subsidy in (-1.0, 0.0, 0.7):
            vf = solve_subsidized(SubsidizedArm(arm, subsidy, 0.9), 1e-8)
            expected = exact_q_star(arm.kernel_passive, arm.kernel_active, arm.reward, subsidy, 0.9)
            assert np.allclose(vf.q, expected, atol=1e-6)


def test_solve_target_arm_near_published_root():
    arm = smart_target_arm()
    tol = 1e-6
    vf = solve_subsidized(SubsidizedArm(arm, 1.3060, 0.999), tol)
    expected = exact_q_star(arm.kernel_passive, arm.kernel_active, arm.reward, 1.3060, 0.999)
    assert np.allclose(vf.q, expected, atol=1e-5)
    assert abs(vf.q[0, 1] - vf.q[0, 0]) <= 10 * 1e-2


def test_value_functions_invariant_and_residual_bound():
    for arm, beta in ((smart_target_arm(), 0.999), (circulant_arm(), 0.9)):
        tol = 1e-6
        vf = solve_subsidized(SubsidizedArm(arm, 0.3, beta), tol)
        assert np.array_equal(vf.v, vf.q.max(axis=1))
        assert _bellman_residual(arm, 0.3, beta, vf.q) <= tol * (1 - beta) / (2 * beta)


def test_solve_raises_numeric_failure_at_cap(monkeypatch):
    monkeypatch.setattr(whittle_mod, "VALUE_ITERATION_CAP", 3)
    arm = smart_target_arm()
    with pytest.raises(NumericFailure) as info:
        solve_subsidized(SubsidizedArm(arm, 0.0, 0.999), 1e-300)
    assert info.value.residual > 0


def test_d_gap_examples():
    target = smart_target_arm()
    circ = circulant_arm()
    assert abs(d_gap(target, 0.999, 1.3060, 0)) <= 1e-2
    assert abs(d_gap(circ, 0.999, 1.0, 2)) <= 1e-2
    for arm in (target, circ):
        big = 2 * np.abs(arm.reward).max() / (1 - 0.999)
        assert all(d_gap(arm, 0.999, big, x) < 0 for x in range(4))
    with pytest.raises(ValueError):
        d_gap(target, 0.999, 0.0, 7)


def test_d_gap_strictly_decreasing_in_subsidy():
    arm = smart_target_arm()
    gaps = [d_gap(arm, 0.999, lam, 1) for lam in (-1.0, 0.0, 0.5, 1.0, 2.0)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_whittle_index_matches_oracle_on_presets():
    for arm, beta in ((smart_target_arm(), 0.999), (circulant_arm(), 0.999), (circulant_arm(), 0.9)):
        got = whittle_index(arm, beta)
        expected = exact_whittle_indices(arm, beta)
        assert np.allclose(got, expected, atol=1e-5), (got, expected)


def test_whittle_index_matches_oracle_on_random_arms():
    rng = np.random.default_rng(7)
    for _ in range(3):
        arm = _random_arm(rng)
        got = whittle_index(arm, 0.9)
        expected = exact_whittle_indices(arm, 0.9)
        assert np.allclose(got, expected, atol=1e-5)


def test_whittle_index_zero_for_action_blind_arm():
    kernel = np.array([[0.6, 0.4], [0.2, 0.8]])
    arm = ArmModel(2, kernel, kernel, [[1.0, 1.0], [2.0, 2.0]])
    assert np.allclose(whittle_index(arm, 0.95), 0.0, atol=1e-6)


def test_whittle_index_bisection_consistency():
    arm = smart_target_arm()
    tol = 1e-6
    indices = whittle_index(arm, 0.999, tol)
    for x in range(4):
        assert abs(d_gap(arm, 0.999, float(indices[x]), x, tol)) <= tol


def test_circulant_priority_ordering():
    idx = whittle_index(circulant_arm(), 0.999)
    assert idx[2] > idx[1] > idx[0] > idx[3]


def test_audit_target_arm_strongly_indexable():
    report = audit_strong_indexability(smart_target_arm(), 0.999, np.linspace(-2, 2, 101))
    assert report.strongly_indexable is True
    assert np.all(np.diff(report.d_curves, axis=1) < 0)
    assert report.grid.shape == (101,) and report.d_curves.shape == (4, 101)
    assert not np.any(np.isnan(report.whittle_index))


def test_audit_circulant_strongly_indexable():
    report = audit_strong_indexability(circulant_arm(), 0.999, np.linspace(-2, 2, 41))
    assert report.strongly_indexable is True


def test_audit_identical_actions_gap_is_minus_subsidy():
    kernel = np.array([[0.5, 0.5], [0.3, 0.7]])
    arm = ArmModel(2, kernel, kernel, [[1.0, 1.0], [0.0, 0.0]])
    grid = np.linspace(-1, 1, 11)
    report = audit_strong_indexability(arm, 0.9, grid)
    assert report.strongly_indexable is True
    assert np.allclose(report.d_curves, -grid[None, :], atol=1e-7)
    assert np.allclose(report.whittle_index, 0.0, atol=1e-6)


def test_audit_rejects_bad_grid():
    arm = circulant_arm()
    with pytest.raises(ValueError):
        audit_strong_indexability(arm, 0.9, [0.0, 1.0])
    with pytest.raises(ValueError):
        audit_strong_indexability(arm, 0.9, [0.0, 1.0, 0.5])


def test_lagrangian_symmetry_and_budget_term():
    scenario = make_homogeneous_target_scenario(5, 1, 0.99)
    lam = 0.8
    vf = solve_subsidized(SubsidizedArm(scenario.arms[0], lam, 0.99), 1e-6)
    single = float(vf.v.mean())
    expected = 5 * single + lam * (1 - 5) / (1 - 0.99)
    assert lagrangian_value(scenario, lam) == pytest.approx(expected, rel=1e-9)
    # budget enters only through the linear term
    wider = make_homogeneous_target_scenario(5, 2, 0.99)
    diff = lagrangian_value(wider, lam) - lagrangian_value(scenario, lam)
    assert diff == pytest.approx(lam / (1 - 0.99), rel=1e-9)


def test_lagrangian_midpoint_convexity():
    scenario = make_homogeneous_target_scenario(5, 1, 0.99)
    grid = [0.0, 0.5, 1.0, 1.5, 2.0]
    values = [lagrangian_value(scenario, lam) for lam in grid]
    for i in range(1, len(grid) - 1):
        assert values[i] <= 0.5 * (values[i - 1] + values[i + 1]) + 1e-6
