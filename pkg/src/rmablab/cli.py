"""Command-line front end: run experiments, print indices, check scenario files."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .arms import load_scenario
from .experiment import (
    ExperimentConfig,
    PolicySpec,
    build_scenario,
    emit_indexability,
    run_experiment,
)
from .whittle import NotIndexableError, NumericFailure, audit_strong_indexability

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", required=True,
                        help="circulant | homogeneous | heterogeneous | path to a scenario JSON file")
    parser.add_argument("--n", type=int, default=5, help="number of arms (presets)")
    parser.add_argument("--k", type=int, default=1, help="activation budget per slot (presets)")
    parser.add_argument("--beta", type=float, default=0.999,
                        help="discount factor (target presets; the circulant preset pins its own)")
    parser.add_argument("--scenario-seed", type=int, default=7,
                        help="generator seed for the heterogeneous preset")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmablab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a multi-seed policy comparison experiment")
    run.add_argument("--config", help="JSON experiment config; other flags are ignored when set")
    _add_scenario_flags(run)
    run.add_argument("--policies", default="wi,isq,wiql,greedy", help="comma-separated policy list")
    run.add_argument("--trials", type=int, default=20)
    run.add_argument("--horizon", type=int, default=None)
    run.add_argument("--episodes", type=int, default=None)
    run.add_argument("--episode-len", type=int, default=None)
    run.add_argument("--seed", type=int, default=42, help="base seed; trial i uses base+i")
    run.add_argument("--out", default=None, help="directory for curve CSVs and summary JSON")
    run.add_argument("--epsilon-e", type=float, default=None, help="exploration constant e for isq")
    run.add_argument("--epsilon-scale", type=float, default=None, help="exploration scale for isq")
    run.add_argument("--backward-rate", type=float, default=None, help="backward sweep rate for isq")
    run.set_defaults(func=_cmd_run)

    whittle = sub.add_parser("whittle", help="print per-state indices and the indexability audit")
    _add_scenario_flags(whittle)
    whittle.add_argument("--grid-lo", type=float, default=-2.0, help="audit grid lower end")
    whittle.add_argument("--grid-hi", type=float, default=2.0, help="audit grid upper end")
    whittle.add_argument("--grid-points", type=int, default=101)
    whittle.add_argument("--out", default=None, help="directory for gap-curve CSV/JSON files")
    whittle.set_defaults(func=_cmd_whittle)

    val = sub.add_parser("validate", help="check a scenario JSON file")
    val.add_argument("file", help="scenario JSON file to check")
    val.set_defaults(func=_cmd_validate)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        return ExperimentConfig.load(args.config)
    isq_params = {}
    if args.epsilon_e is not None:
        isq_params["epsilon_constant"] = args.epsilon_e
    if args.epsilon_scale is not None:
        isq_params["epsilon_scale"] = args.epsilon_scale
    if args.backward_rate is not None:
        isq_params["backward_rate"] = args.backward_rate
    policies = tuple(
        PolicySpec(name.strip(), dict(isq_params) if name.strip() == "isq" else {})
        for name in args.policies.split(",")
        if name.strip()
    )
    return ExperimentConfig(
        scenario=args.scenario,
        n=args.n,
        k=args.k,
        beta=args.beta,
        scenario_seed=args.scenario_seed,
        policies=policies,
        trials=args.trials,
        base_seed=args.seed,
        horizon=args.horizon,
        episodes=args.episodes,
        episode_len=args.episode_len,
        out_dir=args.out,
    )


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    agg = run_experiment(config)
    for name in agg.policies:
        print(f"{name:8s} final metric mean={agg.final_mean[name]:.6g} std={agg.final_std[name]:.6g}")
    for key, pct in sorted(agg.improvements.items()):
        print(f"{key}: {pct:+.3f}%")
    if config.out_dir:
        print(f"wrote curves and summary under {config.out_dir}")
    return EXIT_OK


def _cmd_whittle(args) -> int:
    config = _config_from_args_scenario_only(args)
    scenario = build_scenario(config)
    grid = np.linspace(args.grid_lo, args.grid_hi, args.grid_points)
    seen: dict[bytes, int] = {}
    for i, arm in enumerate(scenario.arms):
        key = arm.kernel_passive.tobytes() + arm.kernel_active.tobytes() + arm.reward.tobytes()
        if key in seen:
            continue
        seen[key] = i
        report = audit_strong_indexability(arm, scenario.discount, grid)
        verdict = {True: "strongly indexable", False: "NOT strongly indexable", None: "inconclusive"}[
            report.strongly_indexable
        ]
        indices = " ".join(f"{v:.4f}" for v in report.whittle_index)
        print(f"arm {i}: indices [{indices}]  audit: {verdict}")
        if args.out:
            emit_indexability(report, args.out, stem=f"indexability_arm{i}")
    if args.out:
        print(f"wrote gap curves under {args.out}")
    return EXIT_OK


def _config_from_args_scenario_only(args) -> ExperimentConfig:
    return ExperimentConfig(
        scenario=args.scenario,
        n=args.n,
        k=args.k,
        beta=args.beta,
        scenario_seed=args.scenario_seed,
        policies=(PolicySpec("wi"),),
        trials=1,
    )


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.file)
    print(f"ok: {scenario.n_arms} arms, budget {scenario.budget}, "
          f"discount {scenario.discount}, metric {scenario.metric_kind}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help (0) and bad flags (2)
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except (NumericFailure, NotIndexableError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
