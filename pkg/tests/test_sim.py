import numpy as np
import pytest
from scipy import stats

from rmablab.arms import ArmModel, ScenarioSpec, make_circulant_scenario, make_homogeneous_target_scenario
from rmablab.sim import accumulate_metric, rollout_fixed_policy, sample_initial_state, step


def _deterministic_scenario():
    eye = np.eye(2)
    arm = ArmModel(2, eye, eye, [[1.0, 1.0], [1.0, 1.0]])
    return ScenarioSpec((arm, arm), 1, 0.9, "time_average")


def test_step_reward_is_table_lookup():
    scenario = make_homogeneous_target_scenario(2, 1, 0.999)
    rng = np.random.default_rng(0)
    for _ in range(20):
        out = step(scenario, np.array([3, 0]), np.array([1, 0]), rng)
        assert out.rewards[0] == -1.0  # active in the lost state is penalized
        assert out.rewards[1] == 0.5
        assert out.total_reward == pytest.approx(out.rewards.sum(), abs=1e-12)


def test_step_degenerate_row_is_deterministic():
    shift = np.array([[0.0, 1.0], [0.0, 1.0]])
    arm = ArmModel(2, shift, shift, [[0.0, 0.0], [0.0, 0.0]])
    scenario = ScenarioSpec((arm, arm), 1, 0.9, "time_average")
    rng = np.random.default_rng(3)
    for _ in range(10):
        out = step(scenario, np.array([0, 1]), np.array([0, 1]), rng)
        assert np.array_equal(out.next_state, [1, 1])


def test_step_rejects_budget_violation():
    scenario = make_circulant_scenario(3, 1)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="budget"):
        step(scenario, np.array([0, 0, 0]), np.array([1, 1, 0]), rng)
    with pytest.raises(ValueError, match="budget"):
        step(scenario, np.array([0, 0, 0]), np.array([0, 0, 0]), rng)


def test_step_rejects_out_of_range_state():
    scenario = make_circulant_scenario(3, 1)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="state"):
        step(scenario, np.array([0, -1, 0]), np.array([1, 0, 0]), rng)
    with pytest.raises(ValueError, match="state"):
        step(scenario, np.array([0, 4, 0]), np.array([1, 0, 0]), rng)


def _sample_transitions(scenario, states, actions, n_samples, seed):
    """Next-state counts per arm, repeatedly stepping from the same joint state."""
    rng = np.random.default_rng(seed)
    s = scenario.arms[0].state_count
    counts = np.zeros((scenario.n_arms, s), dtype=int)
    states = np.asarray(states)
    actions = np.asarray(actions)
    for _ in range(n_samples):
        out = step(scenario, states, actions, rng)
        counts[np.arange(scenario.n_arms), out.next_state] += 1
    return counts


def test_step_circulant_state0_passive_frequencies():
    scenario = make_circulant_scenario(2, 1)
    counts = _sample_transitions(scenario, [0, 0], [0, 1], 100_000, seed=11)
    freq = counts[0] / 100_000
    assert np.all(np.abs(freq - [0.5, 0.0, 0.0, 0.5]) <= 0.01)


@pytest.mark.parametrize(
    "make", [make_circulant_scenario, lambda n, k: make_homogeneous_target_scenario(n, k, 0.999)]
)
def test_step_chi_square_every_row(make):
    # one arm per (state, action) pair so all kernel rows sample in one pass
    scenario_small = make(8, 4)
    states = np.array([0, 1, 2, 3, 0, 1, 2, 3])
    actions = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    n = 100_000
    counts = _sample_transitions(scenario_small, states, actions, n, seed=5)
    for i in range(8):
        arm = scenario_small.arms[i]
        expected = arm.kernel(int(actions[i]))[states[i]] * n
        keep = expected > 0
        assert counts[i][~keep].sum() == 0  # zero-probability targets never sampled
        _, p = stats.chisquare(counts[i][keep], expected[keep])
        assert p > 0.001


def test_sample_initial_state_uniform():
    scenario = make_circulant_scenario(20, 1)
    rng = np.random.default_rng(2)
    draws = np.concatenate([sample_initial_state(scenario, rng) for _ in range(5000)])
    freq = np.bincount(draws, minlength=4) / draws.size
    assert np.all(np.abs(freq - 0.25) <= 0.01)


def test_sample_initial_state_shape_and_determinism():
    scenario = make_circulant_scenario(5, 1)
    a = sample_initial_state(scenario, np.random.default_rng(9))
    b = sample_initial_state(scenario, np.random.default_rng(9))
    assert a.shape == (5,)
    assert np.array_equal(a, b)
    assert np.all((0 <= a) & (a < 4))


def test_accumulate_metric_discounted():
    assert accumulate_metric("discounted_cumulative", 0.0, 2.0, 0, 0.999) == pytest.approx(2.0)
    assert accumulate_metric("discounted_cumulative", 2.0, 2.0, 1, 0.5) == pytest.approx(3.0)


def test_accumulate_metric_time_average():
    running = 0.0
    for t, r in enumerate([1.0, 0.0, 1.0]):
        running = accumulate_metric("time_average", running, r, t, 0.9)
    assert running == pytest.approx(2.0 / 3.0)


def test_accumulate_metric_rejects_bad_input():
    with pytest.raises(ValueError):
        accumulate_metric("time_average", 0.0, 1.0, -1, 0.9)
    with pytest.raises(ValueError):
        accumulate_metric("median", 0.0, 1.0, 0, 0.9)


def test_rollout_minimal_and_deterministic():
    scenario = _deterministic_scenario()
    policy = lambda t, states: np.array([1, 0])
    outcomes, metric = rollout_fixed_policy(scenario, policy, 1, np.random.default_rng(0))
    assert len(outcomes) == 1 and metric.shape == (1,)
    # identity kernels + constant rewards: the whole series is pinned
    outcomes, metric = rollout_fixed_policy(scenario, policy, 50, np.random.default_rng(0))
    assert np.all(metric == 2.0)
    assert all(o.total_reward == 2.0 for o in outcomes)
    with pytest.raises(ValueError):
        rollout_fixed_policy(scenario, policy, 0, np.random.default_rng(0))


def test_rollout_bitwise_reproducible():
    scenario = make_circulant_scenario(4, 2)
    policy = lambda t, states: np.array([1, 1, 0, 0])
    _, m1 = rollout_fixed_policy(scenario, policy, 300, np.random.default_rng(77))
    _, m2 = rollout_fixed_policy(scenario, policy, 300, np.random.default_rng(77))
    assert np.array_equal(m1, m2)
