"""Stochastic simulation of N coupled arms under a joint action vector.

Joint states and actions are plain integer arrays of length N. All
randomness flows through one explicit numpy Generator per trial, consumed
in arm order, so runs replay exactly from a seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .arms import DISCOUNTED_CUMULATIVE, TIME_AVERAGE, ScenarioSpec


@dataclass
class StepOutcome:
    next_state: np.ndarray
    rewards: np.ndarray
    total_reward: float


def check_action(scenario: ScenarioSpec, action: np.ndarray) -> None:
    action = np.asarray(action)
    if action.shape != (scenario.n_arms,) or not np.all((action == 0) | (action == 1)):
        raise ValueError(f"action must be a 0/1 vector of length {scenario.n_arms}")
    active = int(action.sum())
    if active != scenario.budget:
        raise ValueError(f"action activates {active} arms, budget requires exactly {scenario.budget}")


def sample_initial_state(scenario: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    """Independent uniform state per arm; one uniform draw per arm, in arm order."""
    u = rng.random(scenario.n_arms)
    return np.array([int(u[n] * arm.state_count) for n, arm in enumerate(scenario.arms)], dtype=np.int64)


def step(
    scenario: ScenarioSpec,
    state: np.ndarray,
    action: np.ndarray,
    rng: np.random.Generator,
) -> StepOutcome:
    """Advance every arm one slot under its chosen action.

    Next states are sampled independently per arm from the row of the
    action-selected kernel (one uniform per arm, consumed in arm order);
    rewards are deterministic table lookups.
    """
    check_action(scenario, action)
    state = np.asarray(state, dtype=np.int64)
    n = scenario.n_arms
    if state.shape != (n,) or np.any(state < 0) or any(
        state[i] >= arm.state_count for i, arm in enumerate(scenario.arms)
    ):
        raise ValueError("state must hold one in-range state index per arm")
    u = rng.random(n)
    nxt = np.empty(n, dtype=np.int64)
    rewards = np.empty(n)
    for i, arm in enumerate(scenario.arms):
        row = arm.kernel(int(action[i]))[state[i]]
        # inverse-CDF draw; clip guards the u ~ 1, cumsum < 1 float edge
        nxt[i] = min(int(np.searchsorted(np.cumsum(row), u[i], side="right")), arm.state_count - 1)
        rewards[i] = arm.reward[state[i], action[i]]
    return StepOutcome(nxt, rewards, float(rewards.sum()))


def accumulate_metric(kind: str, running: float, slot_reward: float, t: int, discount: float) -> float:
    """Fold one slot's total reward into the running metric.

    discounted_cumulative adds discount**t * slot_reward with t counted on
    the caller's clock; time_average maintains the mean over t+1 slots.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if kind == DISCOUNTED_CUMULATIVE:
        return running + discount**t * slot_reward
    if kind == TIME_AVERAGE:
        return (running * t + slot_reward) / (t + 1)
    raise ValueError(f"unknown metric kind {kind!r}")


def rollout_fixed_policy(
    scenario: ScenarioSpec,
    policy: Callable[[int, np.ndarray], np.ndarray],
    horizon: int,
    rng: np.random.Generator,
) -> tuple[list[StepOutcome], np.ndarray]:
    """Run a non-learning policy for `horizon` slots from a sampled start.

    `policy(t, states)` must return a budget-feasible action vector. Returns
    the per-slot outcomes and the running metric series (same length).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    outcomes: list[StepOutcome] = []
    metric = np.empty(horizon)
    running = 0.0
    state = sample_initial_state(scenario, rng)
    for t in range(horizon):
        out = step(scenario, state, policy(t, state), rng)
        running = accumulate_metric(scenario.metric_kind, running, out.total_reward, t, scenario.discount)
        metric[t] = running
        outcomes.append(out)
        state = out.next_state
    return outcomes, metric
