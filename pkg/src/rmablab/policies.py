"""The four schedulers: learned index policies and fixed-priority baselines.

Learned tables are stacked numpy arrays: q has shape (N, S, 2), per-state
indices (N, S), visit counters (N, S, 2). The index of a state is always
the learned activity gap q[x, 1] - q[x, 0]; schedulers activate the K arms
whose current states carry the largest indices, with an epsilon-decayed
uniform exploration mix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .arms import ArmModel, ScenarioSpec
from .sim import accumulate_metric, rollout_fixed_policy, sample_initial_state, step
from .whittle import whittle_index


@dataclass
class TrialResult:
    """One seeded run: per-slot total rewards, the running metric, and extras."""

    policy: str
    seed: int | None
    rewards: np.ndarray
    metric: np.ndarray
    final_metric: float
    q_snapshots: list | None = None


@dataclass(frozen=True)
class IsqConfig:
    """Knobs for the forward-Sarsa / backward-Q-learning scheduler.

    epsilon at global slot t is epsilon_scale * e / (e + t), clamped to
    (0, 1]; backward_rate is the constant step of the end-of-episode sweep.
    """

    episodes: int
    episode_len: int
    discount: float
    backward_rate: float = 0.1
    epsilon_constant: float = 5.0
    epsilon_scale: float = 1.0

    def __post_init__(self):
        if self.episodes < 1 or self.episode_len < 1:
            raise ValueError("episodes and episode_len must be >= 1")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")
        if not 0.0 < self.backward_rate < 1.0:
            raise ValueError(f"backward_rate must lie in (0, 1), got {self.backward_rate}")
        if self.epsilon_constant <= 0 or self.epsilon_scale <= 0:
            raise ValueError("epsilon_constant and epsilon_scale must be > 0")

    @property
    def horizon(self) -> int:
        return self.episodes * self.episode_len


def epsilon_schedule(config: IsqConfig, t: int) -> float:
    """Exploration probability at global slot t, clamped to (0, 1]."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    e = config.epsilon_constant
    return min(1.0, config.epsilon_scale * e / (e + t))


def select_actions(index_values: np.ndarray, budget: int, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Pick K arms: uniformly at random with probability epsilon, else top-K.

    index_values holds each arm's index evaluated at its current state.
    Ties in the top-K break toward the lowest arm id so runs replay exactly.
    """
    index_values = np.asarray(index_values, dtype=float)
    n = index_values.size
    if not 0 <= budget < n:
        raise ValueError(f"budget must satisfy 0 <= K < N, got K={budget}, N={n}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    action = np.zeros(n, dtype=np.int64)
    if epsilon > 0.0 and rng.random() < epsilon:
        chosen = rng.choice(n, size=budget, replace=False)
    else:
        chosen = np.lexsort((np.arange(n), -index_values))[:budget]
    action[chosen] = 1
    return action


class EpisodeMemory:
    """Per-arm (state, action, reward, next_state) tuples for one episode."""

    def __init__(self, n_arms: int, length: int):
        self.length = length
        self.states = np.empty((n_arms, length), dtype=np.int64)
        self.actions = np.empty((n_arms, length), dtype=np.int64)
        self.rewards = np.empty((n_arms, length))
        self.next_states = np.empty((n_arms, length), dtype=np.int64)
        self.filled = 0

    def record(self, states, actions, rewards, next_states) -> None:
        t = self.filled
        if t >= self.length:
            raise ValueError(f"episode memory already holds {self.length} slots")
        self.states[:, t] = states
        self.actions[:, t] = actions
        self.rewards[:, t] = rewards
        self.next_states[:, t] = next_states
        self.filled += 1

    @property
    def complete(self) -> bool:
        return self.filled == self.length


def init_tables(scenario: ScenarioSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fresh learner state: q copied from the reward tables, indices zero,
    visit counts zero. Requires a uniform state count across arms."""
    counts = {arm.state_count for arm in scenario.arms}
    if len(counts) != 1:
        raise ValueError(f"learners need a uniform state count, got {sorted(counts)}")
    q = np.stack([np.array(arm.reward) for arm in scenario.arms])
    indices = np.zeros(q.shape[:2])
    visits = np.zeros(q.shape, dtype=np.int64)
    return q, indices, visits


def sarsa_forward_update(
    q: np.ndarray,
    visits: np.ndarray,
    indices: np.ndarray,
    arm: int,
    transition: tuple[int, int, float, int],
    next_action: int,
    discount: float,
) -> float:
    """One on-policy update of arm's table from a (x, a, r, x') transition.

    The step size is 1/(L+1) with L the visit count of (x, a) before this
    update; the target bootstraps on the caller's already-chosen next
    action. Increments the counter and refreshes the touched state's index;
    returns the new index value.
    """
    x, a, r, x_next = transition
    alpha = 1.0 / (visits[arm, x, a] + 1.0)
    visits[arm, x, a] += 1
    q[arm, x, a] = (1.0 - alpha) * q[arm, x, a] + alpha * (r + discount * q[arm, x_next, next_action])
    indices[arm, x] = q[arm, x, 1] - q[arm, x, 0]
    return float(indices[arm, x])


def backward_pass(
    q: np.ndarray,
    indices: np.ndarray,
    memory: EpisodeMemory,
    backward_rate: float,
    discount: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Replay a complete episode backward with constant-rate greedy targets.

    Each arm's tuples are visited exactly once in strictly decreasing time
    order; every touched state's index is refreshed from the updated q. The
    mutated (q, indices) pair is returned and becomes the next episode's
    starting tables.
    """
    if not memory.complete:
        raise ValueError(f"episode memory holds {memory.filled} of {memory.length} slots")
    n_arms = q.shape[0]
    for t in range(memory.length - 1, -1, -1):
        for n in range(n_arms):
            x = memory.states[n, t]
            a = memory.actions[n, t]
            r = memory.rewards[n, t]
            x_next = memory.next_states[n, t]
            target = r + discount * q[n, x_next].max()
            q[n, x, a] = (1.0 - backward_rate) * q[n, x, a] + backward_rate * target
            indices[n, x] = q[n, x, 1] - q[n, x, 0]
    return q, indices


def _indices_at(indices: np.ndarray, states: np.ndarray) -> np.ndarray:
    return indices[np.arange(indices.shape[0]), states]


def run_isq(
    scenario: ScenarioSpec,
    config: IsqConfig,
    rng: np.random.Generator,
    record_snapshots: bool = False,
) -> TrialResult:
    """Forward-Sarsa within episodes plus a backward sweep at each episode end.

    States are re-sampled at every episode start, but the exploration clock,
    visit counters, and the reported metric all run on the global slot index
    and carry across episodes. Actions executed at slot t are drawn with
    epsilon(t); within a slot they are chosen before that slot's table
    update, so the Sarsa target bootstraps on the action actually taken next.
    """
    q, indices, visits = init_tables(scenario)
    n = scenario.n_arms
    horizon = config.horizon
    rewards = np.empty(horizon)
    metric = np.empty(horizon)
    snapshots: list | None = [] if record_snapshots else None
    running = 0.0
    t = 0
    for _ in range(config.episodes):
        states = sample_initial_state(scenario, rng)
        actions = select_actions(_indices_at(indices, states), scenario.budget, epsilon_schedule(config, t), rng)
        memory = EpisodeMemory(n, config.episode_len)
        for _ in range(config.episode_len):
            outcome = step(scenario, states, actions, rng)
            next_actions = select_actions(
                _indices_at(indices, outcome.next_state),
                scenario.budget,
                epsilon_schedule(config, t + 1),
                rng,
            )
            memory.record(states, actions, outcome.rewards, outcome.next_state)
            for i in range(n):
                sarsa_forward_update(
                    q,
                    visits,
                    indices,
                    i,
                    (int(states[i]), int(actions[i]), float(outcome.rewards[i]), int(outcome.next_state[i])),
                    int(next_actions[i]),
                    config.discount,
                )
            running = accumulate_metric(scenario.metric_kind, running, outcome.total_reward, t, scenario.discount)
            rewards[t] = outcome.total_reward
            metric[t] = running
            t += 1
            states, actions = outcome.next_state, next_actions
        backward_pass(q, indices, memory, config.backward_rate, config.discount)
        if snapshots is not None:
            snapshots.append((q.copy(), indices.copy()))
    return TrialResult("isq", None, rewards, metric, float(metric[-1]), snapshots)


def run_wiql(scenario: ScenarioSpec, horizon: int, rng: np.random.Generator) -> TrialResult:
    """Per-slot Q-learning with the learned gap as index and eps_t = N/(N+t).

    Every arm updates from its own transition each slot (passive arms still
    observe rewards here); there is no episode structure or backward sweep.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    q, indices, visits = init_tables(scenario)
    n = scenario.n_arms
    beta = scenario.discount
    rewards = np.empty(horizon)
    metric = np.empty(horizon)
    running = 0.0
    states = sample_initial_state(scenario, rng)
    actions = select_actions(_indices_at(indices, states), scenario.budget, 1.0, rng)  # eps_0 = N/(N+0)
    for t in range(horizon):
        outcome = step(scenario, states, actions, rng)
        for i in range(n):
            x, a = int(states[i]), int(actions[i])
            alpha = 1.0 / (visits[i, x, a] + 1.0)
            visits[i, x, a] += 1
            target = outcome.rewards[i] + beta * q[i, outcome.next_state[i]].max()
            q[i, x, a] = (1.0 - alpha) * q[i, x, a] + alpha * target
            indices[i, x] = q[i, x, 1] - q[i, x, 0]
        running = accumulate_metric(scenario.metric_kind, running, outcome.total_reward, t, beta)
        rewards[t] = outcome.total_reward
        metric[t] = running
        epsilon = min(1.0, n / (n + t + 1.0))
        actions = select_actions(_indices_at(indices, outcome.next_state), scenario.budget, epsilon, rng)
        states = outcome.next_state
    return TrialResult("wiql", None, rewards, metric, float(metric[-1]))


def _fixed_priority_trial(
    scenario: ScenarioSpec,
    name: str,
    per_arm_priority: list[np.ndarray],
    horizon: int,
    rng: np.random.Generator,
) -> TrialResult:
    def policy(t: int, states: np.ndarray) -> np.ndarray:
        vals = np.array([per_arm_priority[i][states[i]] for i in range(scenario.n_arms)])
        return select_actions(vals, scenario.budget, 0.0, rng)

    outcomes, metric = rollout_fixed_policy(scenario, policy, horizon, rng)
    rewards = np.array([o.total_reward for o in outcomes])
    return TrialResult(name, None, rewards, metric, float(metric[-1]))


def run_greedy(scenario: ScenarioSpec, horizon: int, rng: np.random.Generator) -> TrialResult:
    """Myopic baseline: activate the K arms with the largest immediate
    reward gain R(x,1) - R(x,0) at their current states. No learning."""
    gains = [np.array(arm.reward[:, 1] - arm.reward[:, 0]) for arm in scenario.arms]
    return _fixed_priority_trial(scenario, "greedy", gains, horizon, rng)


def run_wi_oracle(
    scenario: ScenarioSpec,
    horizon: int,
    rng: np.random.Generator,
    index_solver: Callable[[ArmModel, float], np.ndarray] = whittle_index,
) -> TrialResult:
    """Index oracle: exact per-state indices from the arm models, top-K each
    slot, no exploration. Indices are solved once per distinct arm."""
    cache: dict[bytes, np.ndarray] = {}
    priorities = []
    for arm in scenario.arms:
        key = arm.kernel_passive.tobytes() + arm.kernel_active.tobytes() + arm.reward.tobytes()
        if key not in cache:
            cache[key] = np.asarray(index_solver(arm, scenario.discount), dtype=float)
        priorities.append(cache[key])
    return _fixed_priority_trial(scenario, "wi", priorities, horizon, rng)
