"""
How local is a Boomerang sample?
================================

Jump a data point to depth t_boom, run the reverse chain back, and measure
how far it moved.  Small t_boom keeps the point nearby; t_boom = T forgets it.
"""

import numpy as np

from boomerang_kit import OracleDenoiser, anonymize_dataset, build_linear, locality_sweep
from boomerang_kit.datasets import gmm2

sched = build_linear(1000)
g = gmm2()
den = OracleDenoiser(g, sched)
x0, comp = g.sample(4000, np.random.default_rng(0))

ratios = [0.1, 0.3, 0.5, 0.7, 0.9]
reports, threshold, _ = locality_sweep(x0, den, sched, ratios, seed=1, return_distances=True)
print(f"threshold (5th percentile of distances at ratio 0.1): {threshold:.3f}")
print("ratio  mean_dist  std_err  frac_over")
for r in reports:
    print(f"{r.t_boom_ratio:5.1f}  {r.mean_distance:9.3f}  {r.std_error:7.3f}  {r.frac_over_threshold:9.3f}")

# Deep enough and points start switching mixture component
for t_boom in (200, 500, 800):
    out, rep = anonymize_dataset(x0, t_boom, den, sched, seed=2)
    switched = np.mean((out[:, 0] > 0) != (comp == 0))
    print(f"t_boom={t_boom}: {switched:.1%} of points changed component")
