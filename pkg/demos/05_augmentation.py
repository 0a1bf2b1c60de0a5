"""
Boomerang copies as training data
=================================

Two interleaved spirals, only 64 labelled points.  Each point gets one
Boomerang copy that keeps its label; every epoch half the points are swapped
for their copies.  Shallow copies help, deep ones blur the arms together.
"""

import numpy as np

from boomerang_kit import AugmentationProtocol, OracleDenoiser, augmentation_eval, augmentation_sweep, build_linear
from boomerang_kit.datasets import load_builtin

sched = build_linear(1000)
x, y, g = load_builtin("spirals", 1000, np.random.default_rng(80))
xt, yt, _ = load_builtin("spirals", 2000, np.random.default_rng(81))
den = OracleDenoiser(g, sched)
print(f"spiral mixture with {g.K} components")

res = augmentation_eval(x, y, xt, yt, AugmentationProtocol(300), den, sched, n_seeds=5)
for name, (m, se) in res.summary().items():
    print(f"{name:10s} accuracy {m:.4f} +- {se:.4f}")

ratios = [0.0, 0.25, 0.5, 0.75, 1.0]
sweep = augmentation_sweep(x, y, xt, yt, ratios, den, sched, n_seeds=5)
for r in ratios:
    print(f"t_boom = {r:4.2f} T: {np.mean(sweep[r]):.4f}")
