"""Calibrate the statistics battery on a true pseudo-random source.

Before trusting any verdict about a model, check what the battery reports
for numpy's generator drawing 100 integers from 1..5, repeated 100 times.
A uniform source should give p-values spread over [0, 1] with a mean near
0.5, a small Cramér's V and an RI close to the exact-uniform ceiling.
"""

import numpy as np

from rngaudit.stats import Histogram, baseline_uniform_runs, cell_stats, summarize_runs, uniform_ri

runs = baseline_uniform_runs(5, 100, 100, seed=42)
s = summarize_runs(runs)
print("pseudo-random baseline, range 1..5, 100 runs of 100 draws")
print(f"  p-value   {s.mean_p:.3f} ± {s.std_p:.3f}")
print(f"  Cramér V  {s.mean_v:.3f} ± {s.std_v:.3f}")
print(f"  RI        {s.mean_ri:.3f} ± {s.std_ri:.3f}")
print(f"  exact-uniform RI ceiling: {uniform_ri(5):.4f}")

# p-values of a uniform source are themselves roughly uniform
p = np.array([r.p_value for r in runs])
print("  p-value deciles:", np.histogram(p, bins=10, range=(0, 1))[0].tolist())

# The opposite extreme: a model that always answers 3.
stuck = cell_stats(Histogram(5, np.array([0, 0, 100, 0, 0])), temperature=1.0)
print("\nalways-3 source")
print(f"  chi2 {stuck.chi2:.0f}  p {stuck.p_value:.2e}  V {stuck.cramers_v:.2f}  RI {stuck.randomness_index:.2f}")

# A favourite-number bias: 60% sevens in 1..10 at T=1.
biased = cell_stats(Histogram(10, np.array([2, 3, 4, 5, 6, 5, 60, 6, 5, 4])), temperature=1.0)
print("\nfavourite-7 source")
print(f"  chi2 {biased.chi2:.1f}  p {biased.p_value:.2e}  V {biased.cramers_v:.2f}  RI {biased.randomness_index:.3f}")
