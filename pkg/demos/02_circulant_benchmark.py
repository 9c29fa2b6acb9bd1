"""Compare the four schedulers on the circulant benchmark.

Four-state arms cycle one way when activated and the other way when left
passive; rewards depend on the state only (-1, 0, 0, +1), so a myopic
scheduler sees no signal at all. Long-run reward comes entirely from
steering arms through state 2 toward the paying state 3, which is exactly
what the index priorities encode. A desk-scale horizon keeps this demo
fast; bump horizon/trials for tighter curves.
"""

from rmablab import ExperimentConfig, run_experiment

config = ExperimentConfig(
    scenario="circulant",
    n=5,
    k=1,
    trials=5,
    horizon=6_000,
    base_seed=7,
    out_dir="demo_output/circulant",
)
agg = run_experiment(config)

print("mean final time-average reward over 5 trials:")
for name in agg.policies:
    print(f"  {name:7s} {agg.final_mean[name]:+.4f}  (std {agg.final_std[name]:.4f})")

# The oracle leads, the learned index policy with backward sweeps tracks it,
# plain per-slot Q-learning trails, and the myopic baseline hovers near 0.
print(f"\nlearned-vs-oracle gap: {agg.improvements['isq_vs_wi']:+.2f}%")
print(f"backward sweeps vs plain Q-learning: {agg.improvements['isq_vs_wiql']:+.2f}%")
print("curves written under demo_output/circulant/")
