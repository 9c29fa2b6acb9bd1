"""Multi-seed experiment orchestration and CSV/JSON emission.

A config names a scenario, a policy list, a horizon (or an episode
structure), a trial count, and a base seed. Every (policy, trial) cell gets
its own random stream derived from the base seed, the trial index, and the
policy name, so permuting the policy list never changes any single
policy's curves and identical configs reproduce identical bytes on disk.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .arms import (
    ScenarioSpec,
    load_scenario,
    make_circulant_scenario,
    make_heterogeneous_target_scenario,
    make_homogeneous_target_scenario,
)
from .policies import IsqConfig, TrialResult, run_greedy, run_isq, run_wi_oracle, run_wiql
from .whittle import IndexabilityReport

PRESET_SCENARIOS = ("circulant", "homogeneous", "heterogeneous")
POLICY_NAMES = ("wi", "isq", "wiql", "greedy")

DEFAULT_EPISODE_LEN = 100
DEFAULT_EPISODES = 200
DEFAULT_CIRCULANT_HORIZON = 20_000


@dataclass(frozen=True)
class PolicySpec:
    """A scheduler name plus its hyperparameter overrides."""

    name: str
    params: dict = field(default_factory=dict)

    @staticmethod
    def parse(entry) -> "PolicySpec":
        if isinstance(entry, str):
            return PolicySpec(entry)
        return PolicySpec(entry["name"], dict(entry.get("params", {})))

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "circulant"
    n: int = 5
    k: int = 1
    beta: float = 0.999
    scenario_seed: int = 7
    policies: tuple[PolicySpec, ...] = (PolicySpec("wi"), PolicySpec("isq"), PolicySpec("wiql"), PolicySpec("greedy"))
    trials: int = 20
    base_seed: int = 42
    horizon: int | None = None
    episodes: int | None = None
    episode_len: int | None = None
    out_dir: str | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "n": self.n,
            "k": self.k,
            "beta": self.beta,
            "scenario_seed": self.scenario_seed,
            "policies": [p.to_dict() for p in self.policies],
            "trials": self.trials,
            "base_seed": self.base_seed,
            "horizon": self.horizon,
            "episodes": self.episodes,
            "episode_len": self.episode_len,
            "out_dir": self.out_dir,
        }

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        known = {f: data[f] for f in ExperimentConfig.__dataclass_fields__ if f in data}
        if "policies" in known:
            known["policies"] = tuple(PolicySpec.parse(p) for p in known["policies"])
        return ExperimentConfig(**known)

    @staticmethod
    def load(path) -> "ExperimentConfig":
        with open(path) as fh:
            return ExperimentConfig.from_dict(json.load(fh))


def validate_config(config: ExperimentConfig) -> None:
    """Raise ValueError naming the offending field on any bad setting."""
    if config.scenario not in PRESET_SCENARIOS and not Path(config.scenario).exists():
        raise ValueError(f"scenario: {config.scenario!r} is not a preset {PRESET_SCENARIOS} or an existing file")
    if config.scenario in PRESET_SCENARIOS and not 0 < config.k < config.n:
        raise ValueError(f"k: need 0 < k < n, got k={config.k}, n={config.n}")
    if config.scenario in ("homogeneous", "heterogeneous") and not 0.0 < config.beta < 1.0:
        raise ValueError(f"beta: must lie in (0, 1), got {config.beta}")
    if config.trials < 1:
        raise ValueError(f"trials: must be >= 1, got {config.trials}")
    if not config.policies:
        raise ValueError("policies: at least one policy is required")
    for p in config.policies:
        if p.name not in POLICY_NAMES:
            raise ValueError(f"policies: unknown policy {p.name!r}, expected one of {POLICY_NAMES}")
    horizon, episodes, episode_len = resolve_horizon(config)
    if horizon < 1:
        raise ValueError(f"horizon: must be >= 1, resolved to {horizon}")
    if any(p.name == "isq" for p in config.policies) and episodes * episode_len != horizon:
        raise ValueError(
            f"horizon: must equal episodes * episode_len, got {horizon} != {episodes} * {episode_len}"
        )


def resolve_horizon(config: ExperimentConfig) -> tuple[int, int, int]:
    """Concrete (horizon, episodes, episode_len) from partially-given fields."""
    if config.episodes is not None:
        episode_len = config.episode_len or DEFAULT_EPISODE_LEN
        episodes = config.episodes
        horizon = config.horizon if config.horizon is not None else episodes * episode_len
    elif config.horizon is not None:
        horizon = config.horizon
        if config.episode_len is not None:
            episode_len = config.episode_len
        else:
            # short or indivisible horizons fall back to a single episode
            episode_len = DEFAULT_EPISODE_LEN if horizon % DEFAULT_EPISODE_LEN == 0 else horizon
        episodes = max(1, horizon // episode_len)
    else:
        episode_len = config.episode_len or DEFAULT_EPISODE_LEN
        horizon = DEFAULT_CIRCULANT_HORIZON if config.scenario == "circulant" else DEFAULT_EPISODES * episode_len
        episodes = horizon // episode_len
    return horizon, episodes, episode_len


def build_scenario(config: ExperimentConfig) -> ScenarioSpec:
    if config.scenario == "circulant":
        return make_circulant_scenario(config.n, config.k)
    if config.scenario == "homogeneous":
        return make_homogeneous_target_scenario(config.n, config.k, config.beta)
    if config.scenario == "heterogeneous":
        return make_heterogeneous_target_scenario(config.n, config.k, config.beta, config.scenario_seed)
    return load_scenario(config.scenario)


def trial_rng(policy_name: str, trial_index: int, base_seed: int) -> tuple[int, np.random.Generator]:
    """Per-cell stream: seeded by base_seed + trial index, keyed by policy name."""
    seed = base_seed + trial_index
    ss = np.random.SeedSequence([seed, zlib.crc32(policy_name.encode())])
    return seed, np.random.Generator(np.random.PCG64(ss))


def _isq_defaults(config: ExperimentConfig) -> dict:
    if config.scenario == "circulant":
        return {"epsilon_constant": float(config.n), "epsilon_scale": 0.5}
    return {"epsilon_constant": 5.0, "epsilon_scale": 0.5}


def run_policy_trial(
    scenario: ScenarioSpec,
    policy: PolicySpec,
    config: ExperimentConfig,
    trial_index: int,
) -> TrialResult:
    horizon, episodes, episode_len = resolve_horizon(config)
    seed, rng = trial_rng(policy.name, trial_index, config.base_seed)
    if policy.name == "wi":
        result = run_wi_oracle(scenario, horizon, rng)
    elif policy.name == "wiql":
        result = run_wiql(scenario, horizon, rng)
    elif policy.name == "greedy":
        result = run_greedy(scenario, horizon, rng)
    elif policy.name == "isq":
        params = {**_isq_defaults(config), **policy.params}
        isq_config = IsqConfig(
            episodes=episodes,
            episode_len=episode_len,
            discount=scenario.discount,
            backward_rate=float(params.get("backward_rate", 0.1)),
            epsilon_constant=float(params["epsilon_constant"]),
            epsilon_scale=float(params["epsilon_scale"]),
        )
        result = run_isq(scenario, isq_config, rng)
    else:
        raise ValueError(f"unknown policy {policy.name!r}")
    return replace(result, seed=seed)


@dataclass
class AggregateResult:
    """Across-trial aggregation for each policy in a single experiment."""

    policies: tuple[str, ...]
    horizon: int
    mean_curves: dict[str, np.ndarray]
    std_curves: dict[str, np.ndarray]
    final_mean: dict[str, float]
    final_std: dict[str, float]
    improvements: dict[str, float]
    trials: dict[str, list[TrialResult]]


def percentage_improvement(a: float, b: float) -> float:
    """How much larger a is than b, in percent of |b|."""
    if b == 0:
        raise ValueError("reference metric is 0, improvement undefined")
    return 100.0 * (a - b) / abs(b)


def run_experiment(config: ExperimentConfig) -> AggregateResult:
    """Run every (policy, trial) cell, aggregate, and write any outputs."""
    validate_config(config)
    scenario = build_scenario(config)
    horizon, _, _ = resolve_horizon(config)
    names = tuple(p.name for p in config.policies)
    trials: dict[str, list[TrialResult]] = {}
    for policy in config.policies:
        trials[policy.name] = [
            run_policy_trial(scenario, policy, config, i) for i in range(config.trials)
        ]
    mean_curves, std_curves, final_mean, final_std = {}, {}, {}, {}
    for name in names:
        curves = np.stack([t.metric for t in trials[name]])
        mean_curves[name] = curves.mean(axis=0)
        std_curves[name] = curves.std(axis=0)
        finals = np.array([t.final_metric for t in trials[name]])
        final_mean[name] = float(finals.mean())
        final_std[name] = float(finals.std())
    improvements = {}
    for a in names:
        for b in names:
            if a != b and final_mean[b] != 0:
                improvements[f"{a}_vs_{b}"] = percentage_improvement(final_mean[a], final_mean[b])
    agg = AggregateResult(names, horizon, mean_curves, std_curves, final_mean, final_std, improvements, trials)
    if config.out_dir is not None:
        emit_curves(agg, config, config.out_dir)
    return agg


def emit_curves(agg: AggregateResult, config: ExperimentConfig, out_dir) -> dict[str, Path]:
    """One curve CSV per policy plus a JSON summary echoing the config.

    CSV header is t,mean_metric,std_metric with one row per slot. The
    config echo in summary.json feeds back through ExperimentConfig.from_dict.
    """
    if not agg.policies:
        raise ValueError("no results to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for name in agg.policies:
        path = out / f"curve_{name}.csv"
        with open(path, "w") as fh:
            fh.write("t,mean_metric,std_metric\n")
            mean, std = agg.mean_curves[name], agg.std_curves[name]
            for t in range(agg.horizon):
                fh.write(f"{t},{mean[t]:.17g},{std[t]:.17g}\n")
        written[name] = path
    # echo the experiment definition, not the destination, so identical
    # configs written to different directories emit identical bytes
    summary = {
        "config": replace(config, out_dir=None).to_dict(),
        "policies": {
            name: {"final_mean": agg.final_mean[name], "final_std": agg.final_std[name]}
            for name in agg.policies
        },
        "improvements": agg.improvements,
    }
    path = out / "summary.json"
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written["summary"] = path
    return written


def emit_indexability(report: IndexabilityReport, out_dir, stem: str = "indexability") -> tuple[Path, Path]:
    """Gap curves as CSV (lambda,D_0,...,D_{S-1}) plus a JSON verdict sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_states = report.d_curves.shape[0]
    csv_path = out / f"{stem}.csv"
    with open(csv_path, "w") as fh:
        fh.write("lambda," + ",".join(f"D_{x}" for x in range(n_states)) + "\n")
        for g, lam in enumerate(report.grid):
            row = ",".join(f"{report.d_curves[x, g]:.17g}" for x in range(n_states))
            fh.write(f"{lam:.17g},{row}\n")
    json_path = out / f"{stem}.json"
    with open(json_path, "w") as fh:
        json.dump(
            {
                "strongly_indexable": report.strongly_indexable,
                "whittle_index": [None if np.isnan(v) else v for v in report.whittle_index.tolist()],
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return csv_path, json_path
