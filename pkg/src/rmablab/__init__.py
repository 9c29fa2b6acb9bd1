"""Restless multi-armed bandit scheduling lab.

Builds finite two-action arm scenarios, runs learned index schedulers
against an exact index oracle and a myopic baseline, and audits
indexability, all on seeded reproducible simulations.
"""

from .arms import (
    ArmModel,
    ScenarioSpec,
    circulant_arm,
    load_scenario,
    make_circulant_scenario,
    make_heterogeneous_target_scenario,
    make_homogeneous_target_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    smart_target_arm,
    validate,
)
from .experiment import (
    AggregateResult,
    ExperimentConfig,
    PolicySpec,
    build_scenario,
    emit_curves,
    emit_indexability,
    percentage_improvement,
    run_experiment,
)
from .policies import (
    EpisodeMemory,
    IsqConfig,
    TrialResult,
    backward_pass,
    epsilon_schedule,
    run_greedy,
    run_isq,
    run_wi_oracle,
    run_wiql,
    sarsa_forward_update,
    select_actions,
)
from .sim import StepOutcome, accumulate_metric, rollout_fixed_policy, sample_initial_state, step
from .whittle import (
    IndexabilityReport,
    NotIndexableError,
    NumericFailure,
    SubsidizedArm,
    ValueFunctions,
    audit_strong_indexability,
    d_gap,
    lagrangian_value,
    solve_subsidized,
    whittle_index,
)

__version__ = "0.1.0"
