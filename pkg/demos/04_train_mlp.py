"""
Training a small denoiser
=========================

An MLP predicts the noise; a fixed identity turns that into the reverse mean.
On a standard Gaussian the exact answer is known, so we can score the fit.
"""

import numpy as np

from boomerang_kit import (
    BoomerangConfig, OracleDenoiser, TrainConfig, boomerang, build_linear, gradient_check,
    sample_global, train_mlp,
)
from boomerang_kit.datasets import gauss1, make_moons
from boomerang_kit.mlp import new_denoiser

sched = build_linear(1000)

# backprop against central differences first
den = new_denoiser(2, sched, (16, 16), rng=np.random.default_rng(0))
rng = np.random.default_rng(1)
err = gradient_check(den, rng.standard_normal((4, 2)), rng.integers(1, 1001, 4), rng.standard_normal((4, 2)))
print(f"gradient check: max relative error {err:.2e}")

data = np.random.default_rng(0).standard_normal((2000, 2))
den, losses = train_mlp(data, sched, TrainConfig(epochs=200, seed=0))
print(f"loss: first epoch {losses[0]:.3f}, last {losses[-1]:.3f}")

oracle = OracleDenoiser(gauss1(), sched)
grid = np.stack(np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13)), -1).reshape(-1, 2)
for t in (10, 100, 500, 1000):
    rms = np.sqrt(np.mean((den(grid, t) - oracle(grid, t)) ** 2))
    print(f"t={t:4d}  RMS(f_mlp - f_oracle) = {rms:.4f}")

# a learned model on moons: global samples and a Boomerang pass
x, _ = make_moons(2000, np.random.default_rng(0))
den, _ = train_mlp(x, sched, TrainConfig(epochs=200, seed=0))
samples = sample_global(den, sched, 2, 500, 3).x
print("moons data mean", x.mean(0).round(3), "samples mean", samples.mean(0).round(3))
moved = boomerang(x[:500], BoomerangConfig(200, seed=4), den, sched).x
print("mean shift at t_boom = 200:", np.linalg.norm(moved - x[:500], axis=1).mean().round(3))
