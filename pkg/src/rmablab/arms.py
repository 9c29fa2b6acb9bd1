"""Finite two-action arm models and scenario builders.

An arm is a small MDP: one row-stochastic transition kernel per action
(passive a=0, active a=1) and a state x action reward table. A scenario
bundles N arms with an activation budget K, a discount factor, and the
metric used to score runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

TIME_AVERAGE = "time_average"
DISCOUNTED_CUMULATIVE = "discounted_cumulative"
METRIC_KINDS = (TIME_AVERAGE, DISCOUNTED_CUMULATIVE)

ROW_SUM_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ArmModel:
    """One target's MDP: kernels indexed (current, next), rewards (state, action)."""

    state_count: int
    kernel_passive: np.ndarray
    kernel_active: np.ndarray
    reward: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kernel_passive", _frozen(self.kernel_passive))
        object.__setattr__(self, "kernel_active", _frozen(self.kernel_active))
        object.__setattr__(self, "reward", _frozen(self.reward))

    def kernel(self, action: int) -> np.ndarray:
        return self.kernel_active if action == 1 else self.kernel_passive


@dataclass(frozen=True)
class ScenarioSpec:
    """N arms sharing a budget of K concurrent activations per slot."""

    arms: tuple[ArmModel, ...]
    budget: int
    discount: float
    metric_kind: str

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        n = len(self.arms)
        if not 0 < self.budget < n:
            raise ValueError(f"budget must satisfy 0 < K < N, got K={self.budget}, N={n}")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")
        if self.metric_kind not in METRIC_KINDS:
            raise ValueError(f"metric_kind must be one of {METRIC_KINDS}, got {self.metric_kind!r}")

    @property
    def n_arms(self) -> int:
        return len(self.arms)


def validate(arm: ArmModel) -> str | None:
    """Check arm invariants; return None if ok, else the first violation found.

    Checks, in order: shapes, state count, kernel entry range, kernel row
    sums (within 1e-9), reward finiteness.
    """
    s = arm.state_count
    if s < 2:
        return f"state_count must be >= 2, got {s}"
    for name, k in (("kernel_passive", arm.kernel_passive), ("kernel_active", arm.kernel_active)):
        if k.shape != (s, s):
            return f"{name} has shape {k.shape}, expected {(s, s)}"
        if np.any(k < 0) or np.any(k > 1):
            bad = np.argwhere((k < 0) | (k > 1))[0]
            return f"{name} entry {tuple(bad)} = {k[tuple(bad)]} outside [0, 1]"
        sums = k.sum(axis=1)
        off = np.abs(sums - 1.0)
        if np.any(off > ROW_SUM_TOL):
            row = int(np.argmax(off))
            return f"{name} row {row} sums to {sums[row]:.12g}, expected 1"
    if arm.reward.shape != (s, 2):
        return f"reward has shape {arm.reward.shape}, expected {(s, 2)}"
    if not np.all(np.isfinite(arm.reward)):
        bad = np.argwhere(~np.isfinite(arm.reward))[0]
        return f"reward entry {tuple(bad)} is not finite"
    return None


def _checked(arm: ArmModel) -> ArmModel:
    problem = validate(arm)
    if problem is not None:
        raise ValueError(problem)
    return arm


# Circulant benchmark: 4 states cycling in opposite directions per action,
# rewards depend on state only.
_CIRCULANT_PASSIVE = [
    [0.5, 0.0, 0.0, 0.5],
    [0.5, 0.5, 0.0, 0.0],
    [0.0, 0.5, 0.5, 0.0],
    [0.0, 0.0, 0.5, 0.5],
]
_CIRCULANT_ACTIVE = [
    [0.5, 0.5, 0.0, 0.0],
    [0.0, 0.5, 0.5, 0.0],
    [0.0, 0.0, 0.5, 0.5],
    [0.5, 0.0, 0.0, 0.5],
]
_CIRCULANT_REWARD = [[-1.0, -1.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]

# Smart-target model: states 0..3 order dynamic modes from calm to lost
# (not detected). Active tracking earns more but drives the target toward
# higher states; passive tracking relaxes it back toward state 0.
_TARGET_PASSIVE = [
    [0.8, 0.2, 0.0, 0.0],
    [0.3, 0.7, 0.0, 0.0],
    [0.0, 0.3, 0.7, 0.0],
    [0.4, 0.0, 0.0, 0.6],
]
_TARGET_ACTIVE = [
    [0.3, 0.7, 0.0, 0.0],
    [0.0, 0.3, 0.7, 0.0],
    [0.0, 0.0, 0.3, 0.7],
    [0.3, 0.0, 0.0, 0.7],
]
_TARGET_REWARD = [[0.5, 2.0], [0.3, 1.5], [0.1, 1.0], [0.0, -1.0]]

# Discount stored on the circulant scenario; its score is a time average,
# but the learners and the index oracle still need a discount factor.
CIRCULANT_DEFAULT_DISCOUNT = 0.999


def circulant_arm() -> ArmModel:
    return _checked(ArmModel(4, _CIRCULANT_PASSIVE, _CIRCULANT_ACTIVE, _CIRCULANT_REWARD))


def smart_target_arm() -> ArmModel:
    return _checked(ArmModel(4, _TARGET_PASSIVE, _TARGET_ACTIVE, _TARGET_REWARD))


def make_circulant_scenario(n_arms: int, budget: int) -> ScenarioSpec:
    """N identical circulant arms scored by time-average reward."""
    if n_arms < 2 or not 0 < budget < n_arms:
        raise ValueError(f"need 0 < budget < n_arms, got budget={budget}, n_arms={n_arms}")
    arm = circulant_arm()
    return ScenarioSpec((arm,) * n_arms, budget, CIRCULANT_DEFAULT_DISCOUNT, TIME_AVERAGE)


def make_homogeneous_target_scenario(n_arms: int, budget: int, discount: float) -> ScenarioSpec:
    """N identical smart-target arms scored by discounted cumulative reward."""
    if n_arms < 2 or not 0 < budget < n_arms:
        raise ValueError(f"need 0 < budget < n_arms, got budget={budget}, n_arms={n_arms}")
    if not 0.0 < discount < 1.0:
        raise ValueError(f"discount must lie in (0, 1), got {discount}")
    arm = smart_target_arm()
    return ScenarioSpec((arm,) * n_arms, budget, discount, DISCOUNTED_CUMULATIVE)


def make_heterogeneous_target_scenario(
    n_arms: int, budget: int, discount: float, rng_seed: int
) -> ScenarioSpec:
    """N smart-target arms with independently randomized kernels.

    Sampling preserves the zero pattern of the homogeneous target kernels
    and its qualitative drift: an actively tracked arm tends to climb
    toward higher (more evasive) states, a passively tracked arm drifts
    back toward state 0. Per arm, in draw order:

    * active rows 0-2: self-stay probability U[0.2, 0.5], remainder to the
      next-higher state
    * active row 3: escape-to-0 probability U[0.2, 0.5], remainder stays
    * passive row 0: self-stay U[0.6, 0.9], remainder to state 1
    * passive rows 1-2: step-down probability U[0.2, 0.5], remainder stays
    * passive row 3: escape-to-0 probability U[0.2, 0.5], remainder stays

    The reward table is shared by all arms. The result is a pure function
    of (n_arms, budget, discount, rng_seed).
    """
    if n_arms < 2 or not 0 < budget < n_arms:
        raise ValueError(f"need 0 < budget < n_arms, got budget={budget}, n_arms={n_arms}")
    if not 0.0 < discount < 1.0:
        raise ValueError(f"discount must lie in (0, 1), got {discount}")
    rng = np.random.default_rng(rng_seed)
    arms = []
    for _ in range(n_arms):
        active = np.zeros((4, 4))
        passive = np.zeros((4, 4))
        for row in range(3):
            stay = rng.uniform(0.2, 0.5)
            active[row, row] = stay
            active[row, row + 1] = 1.0 - stay
        escape = rng.uniform(0.2, 0.5)
        active[3, 0] = escape
        active[3, 3] = 1.0 - escape
        stay0 = rng.uniform(0.6, 0.9)
        passive[0, 0] = stay0
        passive[0, 1] = 1.0 - stay0
        for row in (1, 2):
            down = rng.uniform(0.2, 0.5)
            passive[row, row - 1] = down
            passive[row, row] = 1.0 - down
        escape = rng.uniform(0.2, 0.5)
        passive[3, 0] = escape
        passive[3, 3] = 1.0 - escape
        arms.append(_checked(ArmModel(4, passive, active, _TARGET_REWARD)))
    return ScenarioSpec(tuple(arms), budget, discount, DISCOUNTED_CUMULATIVE)


def scenario_to_dict(scenario: ScenarioSpec) -> dict:
    return {
        "arms": [
            {
                "state_count": arm.state_count,
                "kernel_passive": arm.kernel_passive.tolist(),
                "kernel_active": arm.kernel_active.tolist(),
                "reward": arm.reward.tolist(),
            }
            for arm in scenario.arms
        ],
        "budget": scenario.budget,
        "discount": scenario.discount,
        "metric_kind": scenario.metric_kind,
    }


def scenario_from_dict(data: dict) -> ScenarioSpec:
    """Build and fully validate a scenario from its dict form.

    Raises ValueError naming the offending field on any problem.
    """
    for key in ("arms", "budget", "discount", "metric_kind"):
        if key not in data:
            raise ValueError(f"scenario is missing field {key!r}")
    arms = []
    for i, entry in enumerate(data["arms"]):
        for key in ("state_count", "kernel_passive", "kernel_active", "reward"):
            if key not in entry:
                raise ValueError(f"arms[{i}] is missing field {key!r}")
        arm = ArmModel(
            int(entry["state_count"]),
            entry["kernel_passive"],
            entry["kernel_active"],
            entry["reward"],
        )
        problem = validate(arm)
        if problem is not None:
            raise ValueError(f"arms[{i}]: {problem}")
        arms.append(arm)
    return ScenarioSpec(tuple(arms), int(data["budget"]), float(data["discount"]), data["metric_kind"])


def save_scenario(scenario: ScenarioSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")


def load_scenario(path) -> ScenarioSpec:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
