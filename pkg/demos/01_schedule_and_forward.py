"""
Noise schedules and the forward process
=======================================

A linear schedule, its cumulative products, and a check that stepping the
forward chain t times lands on the same distribution as one closed-form jump.
"""

import numpy as np

from boomerang_kit import Sample, build_linear, build_stride, forward_jump, forward_step

sched = build_linear(1000, beta_min=1e-4, beta_max=0.02)

# alpha_t falls from 1 to almost 0; x_T is essentially pure noise
for t in (1, 10, 100, 500, 1000):
    print(f"t={t:4d}  alpha={sched.alphas[t]:.6g}  bar_beta={sched.bar_betas[t]:.6g}")

# A stride keeps 50 of the 1000 steps.  The effective betas absorb the skipped
# ones so the cumulative products agree at the kept steps.
stride = build_stride(sched, 50)
print("stride steps:", stride.steps[:5], "...", stride.steps[-3:])
print("alpha agreement:", np.allclose(stride.effective_alphas, sched.alphas[stride.steps]))

# step 200 times vs jump once
rng = np.random.default_rng(0)
x0 = np.tile([1.5, -0.5], (20_000, 1))
s = Sample(x0, 0)
for _ in range(200):
    s = forward_step(s, sched, rng)
j = forward_jump(Sample(x0, 0), 200, sched, rng)

a = sched.alphas[200]
print("expected mean", np.sqrt(a) * x0[0], "var", 1 - a)
print("stepped  mean", s.x.mean(0).round(4), "var", s.x.var(0).round(4))
print("jumped   mean", j.x.mean(0).round(4), "var", j.x.var(0).round(4))
