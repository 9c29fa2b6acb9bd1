"""Audit a smart-target arm and extract its per-state activity indices.

The smart-target model has four dynamic modes (0 = calm cruise up to
3 = lost). Attaching a growing subsidy to the passive action makes
activation progressively less attractive; if the activity gap
D_x = Q(x, active) - Q(x, passive) falls strictly in the subsidy for every
state, a priority ordering by gap roots is well defined and the index
policy applies. This script runs that audit and prints the indices.
"""

import numpy as np

from rmablab import audit_strong_indexability, emit_indexability, smart_target_arm, whittle_index

arm = smart_target_arm()
beta = 0.999

# Exact per-state indices: the subsidy making both actions equally good.
indices = whittle_index(arm, beta)
for state, value in enumerate(indices):
    print(f"state {state}: index {value:+.4f}")

# The calm state earns the top priority (tracking it is cheap insurance),
# while the lost state has a negative index: active tracking there mostly
# burns the budget on a target that will likely stay lost.
assert indices.argmax() == 0 and indices.argmin() == 3

# Sweep the gap curves across subsidies and check strict decrease.
report = audit_strong_indexability(arm, beta, np.linspace(-2.0, 2.0, 101))
print(f"strongly indexable: {report.strongly_indexable}")

# Persist the curves for plotting (lambda, D_0..D_3 columns).
csv_path, json_path = emit_indexability(report, "demo_output", stem="target_gap_curves")
print(f"wrote {csv_path} and {json_path}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for state in range(4):
        plt.plot(report.grid, report.d_curves[state], label=f"state {state}")
    plt.axhline(0.0, color="k", lw=0.5)
    plt.xlabel("passive subsidy")
    plt.ylabel("activity gap D_x")
    plt.legend()
    plt.savefig("demo_output/target_gap_curves.png", dpi=120)
    print("wrote demo_output/target_gap_curves.png")
except ImportError:
    pass
