"""Exact single-arm index machinery.

The per-arm relaxation attaches a subsidy to the passive action: passive
reward becomes R(x,0) + subsidy while active stays R(x,1). Value iteration
solves that two-action MDP; the activity gap D_x = Q(x,1) - Q(x,0) is then
strictly decreasing in the subsidy for well-behaved arms, and the index of
state x is the subsidy at which the gap crosses zero (both actions equally
attractive). The audit checks that monotonicity numerically on a grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arms import ArmModel, ScenarioSpec

DEFAULT_TOL = 1e-6
VALUE_ITERATION_CAP = 1_000_000
BISECTION_CAP = 300
# Consecutive grid values must drop by more than this for a strict-decrease
# verdict; smaller drops leave the audit inconclusive instead of false.
STRICT_DECREASE_TOL = 1e-9


class NumericFailure(RuntimeError):
    """Iteration cap reached before the requested tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NotIndexableError(RuntimeError):
    """The activity gap does not change sign on the bisection bracket."""

    def __init__(self, state: int, message: str):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class SubsidizedArm:
    arm: ArmModel
    subsidy: float
    discount: float

    def __post_init__(self):
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")


@dataclass(frozen=True)
class ValueFunctions:
    """Optimal state-action values q (S, 2) and state values v = max_a q."""

    q: np.ndarray
    v: np.ndarray


def _subsidized_rewards(arm: ArmModel, subsidies: np.ndarray) -> np.ndarray:
    """Reward tables (B, S, 2) with each subsidy added to the passive column."""
    r = np.broadcast_to(arm.reward, (subsidies.size, arm.state_count, 2)).copy()
    r[:, :, 0] += subsidies[:, None]
    return r


def _evaluate_greedy_policy(
    q: np.ndarray, r: np.ndarray, kernels: np.ndarray, discount: float
) -> np.ndarray:
    """Exact Q of the policy that is greedy in q, per batch element.

    Solves (I - b*P_pi) v = r_pi directly; used to jump value iteration
    ahead without changing the fixed point it converges to.
    """
    s = q.shape[1]
    policy = q.argmax(axis=2)  # (B, S)
    p_pi = kernels[policy, np.arange(s)]  # (B, S, S)
    r_pi = np.take_along_axis(r, policy[:, :, None], axis=2)[:, :, 0]
    v = np.linalg.solve(np.eye(s) - discount * p_pi, r_pi[:, :, None])[:, :, 0]
    return r + discount * np.stack((v @ kernels[0].T, v @ kernels[1].T), axis=2)


def _value_iterate_batch(
    arm: ArmModel,
    subsidies: np.ndarray,
    discount: float,
    tol: float,
    q0: np.ndarray | None = None,
) -> np.ndarray:
    """Fixed points (B, S, 2) of the subsidized Bellman operator, one per subsidy.

    Stops when the sup-norm residual of a genuine Bellman sweep falls below
    tol*(1-b)/(2b), which bounds the value error by tol; raises
    NumericFailure at the sweep cap. Every few sweeps the iterate jumps to
    the exact value of its own greedy policy, which cuts the sweep count by
    orders of magnitude for discounts near 1 without affecting the limit.
    """
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    kernels = np.stack((arm.kernel_passive, arm.kernel_active))
    p0t, p1t = kernels[0].T, kernels[1].T
    r = _subsidized_rewards(arm, subsidies)
    q = r.copy() if q0 is None else np.array(q0, dtype=float)
    threshold = tol * (1.0 - discount) / (2.0 * discount)
    residual = np.inf
    jump_every = 10
    for sweep in range(VALUE_ITERATION_CAP):
        if sweep % jump_every == 0:
            q = _evaluate_greedy_policy(q, r, kernels, discount)
        v = q.max(axis=2)
        q_next = r + discount * np.stack((v @ p0t, v @ p1t), axis=2)
        residual = float(np.abs(q_next - q).max())
        q = q_next
        if residual <= threshold:
            return q
    raise NumericFailure("value iteration did not converge within the cap", residual)


def solve_subsidized(
    sub: SubsidizedArm, tol: float = DEFAULT_TOL, q0: np.ndarray | None = None
) -> ValueFunctions:
    """Solve the subsidized two-action arm by value iteration.

    The returned q includes the subsidy in the passive column's values. An
    optional q0 warm-starts the iteration (same fixed point, fewer sweeps).
    """
    lam = np.array([sub.subsidy], dtype=float)
    q = _value_iterate_batch(sub.arm, lam, sub.discount, tol, None if q0 is None else q0[None])[0]
    return ValueFunctions(q, q.max(axis=1))


def d_gap(arm: ArmModel, discount: float, subsidy: float, state: int, tol: float = DEFAULT_TOL) -> float:
    """Activity gap at one state: activate-then-optimal minus passive-then-optimal.

    Both branches continue optimally in the subsidized arm, and the passive
    branch earns the subsidy, so the gap is q(state,1) - q(state,0) of the
    subsidized solution. Its root in the subsidy is the state's index.
    """
    if not 0 <= state < arm.state_count:
        raise ValueError(f"state {state} out of range for {arm.state_count} states")
    vf = solve_subsidized(SubsidizedArm(arm, subsidy, discount), tol)
    return float(vf.q[state, 1] - vf.q[state, 0])


def _bracket_halfwidth(arm: ArmModel, discount: float, tol: float) -> float:
    spread = 2.0 * float(np.abs(arm.reward).max())
    # degenerate all-zero reward table still needs a sign change around 0
    return max(spread, tol) / (1.0 - discount)


def whittle_index(arm: ArmModel, discount: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Per-state index by bisection on the activity gap.

    The bracket +-2*max|R|/(1-b) exceeds any achievable discounted reward
    spread, so the gap is positive at the lower end and negative at the
    upper end for indexable arms; a missing sign change raises
    NotIndexableError. All states bisect in lockstep on one batched solver.
    """
    s = arm.state_count
    half = _bracket_halfwidth(arm, discount, tol)
    states = np.arange(s)

    q_ends = _value_iterate_batch(arm, np.array([-half, half]), discount, tol)
    d_lo = q_ends[0, states, 1] - q_ends[0, states, 0]
    d_hi = q_ends[1, states, 1] - q_ends[1, states, 0]
    for x in range(s):
        if not (d_lo[x] > 0.0 > d_hi[x]):
            raise NotIndexableError(
                x, f"activity gap does not change sign on [-{half:.6g}, {half:.6g}] at state {x}"
            )

    lo = np.full(s, -half)
    hi = np.full(s, half)
    out = np.zeros(s)
    done = np.zeros(s, dtype=bool)
    q_warm: np.ndarray | None = None
    for _ in range(BISECTION_CAP):
        mid = 0.5 * (lo + hi)
        q_mid = _value_iterate_batch(arm, mid, discount, tol, q_warm)
        q_warm = q_mid
        d_mid = q_mid[states, states, 1] - q_mid[states, states, 0]
        newly = ~done & (np.abs(d_mid) <= tol)
        out[newly] = mid[newly]
        done |= newly
        if done.all():
            return out
        shrink_lo = ~done & (d_mid > 0)
        lo[shrink_lo] = mid[shrink_lo]
        hi[~done & ~shrink_lo] = mid[~done & ~shrink_lo]
    raise NumericFailure(
        "bisection did not reach the gap tolerance", float(np.abs(d_mid[~done]).max())
    )


@dataclass(frozen=True)
class IndexabilityReport:
    """Activity-gap curves on a subsidy grid plus the monotonicity verdict.

    strongly_indexable is True when every state's curve strictly decreases
    across the grid, False when some step increases, and None when the
    strictest movement is a plateau too small to call either way.
    """

    grid: np.ndarray
    d_curves: np.ndarray
    strongly_indexable: bool | None
    whittle_index: np.ndarray

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(),
            "d_curves": self.d_curves.tolist(),
            "strongly_indexable": self.strongly_indexable,
            "whittle_index": [None if np.isnan(v) else v for v in self.whittle_index.tolist()],
        }


def audit_strong_indexability(arm: ArmModel, discount: float, grid) -> IndexabilityReport:
    """Evaluate the activity gap of every state across a subsidy grid.

    The verdict follows the strict-decrease tolerance: drops smaller than
    1e-9 leave the audit inconclusive (None) rather than false. Indices are
    attached when bisection succeeds, else NaN.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must hold at least 3 strictly increasing subsidy values")
    q = _value_iterate_batch(arm, grid, discount, DEFAULT_TOL)
    s = arm.state_count
    d_curves = (q[:, :, 1] - q[:, :, 0]).T  # (S, G)

    diffs = np.diff(d_curves, axis=1)
    if np.any(diffs > STRICT_DECREASE_TOL):
        verdict: bool | None = False
    elif np.any(diffs > -STRICT_DECREASE_TOL):
        verdict = None
    else:
        verdict = True

    try:
        indices = whittle_index(arm, discount)
    except (NotIndexableError, NumericFailure):
        indices = np.full(s, np.nan)
    return IndexabilityReport(grid, d_curves, verdict, indices)


def lagrangian_value(scenario: ScenarioSpec, subsidy: float, tol: float = DEFAULT_TOL) -> float:
    """Dual value of the relaxed scheduling problem at one subsidy.

    Sums each arm's optimal subsidized value averaged over a uniform
    initial state, plus subsidy * (K - N)/(1 - b) for the budget term.
    """
    beta = scenario.discount
    total = 0.0
    for arm in scenario.arms:
        vf = solve_subsidized(SubsidizedArm(arm, subsidy, beta), tol)
        total += float(vf.v.mean())
    total += subsidy * (scenario.budget - scenario.n_arms) / (1.0 - beta)
    return total
