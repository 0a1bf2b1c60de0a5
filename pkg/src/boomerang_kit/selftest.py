"""Brute-force oracle checks, small enough to run in seconds."""

from __future__ import annotations

import numpy as np

from .denoiser import GaussianMixture, oracle_reverse_mean, posterior_mean_x0
from .forward import Sample, forward_jump, forward_step
from .mlp import gradient_check, new_denoiser
from .schedule import NoiseSchedule, build_linear


def check_schedule_products(rng, n=20):
    worst = 0.0
    for _ in range(n):
        T = int(rng.integers(1, 2000))
        sched = NoiseSchedule.from_betas(rng.uniform(1e-5, 0.05, T))
        prod = 1.0
        for t in range(1, T + 1):
            prod *= 1.0 - sched.betas[t]
            worst = max(worst, abs(prod - sched.alphas[t]) / sched.alphas[t])
    return worst < 1e-12, f"max relative error {worst:.2e}"


def trapezoid_posterior_mean(gmm, x_t, t, sched, nodes=10_000):
    """E[x_0 | x_t] in one dimension by trapezoid quadrature.

    The grid spans 6 standard deviations of every prior component and of the
    likelihood ``x_t / sqrt(alpha_t) +- 6 sqrt((1 - alpha_t) / alpha_t)``.
    """
    a = sched.alphas[t]
    sd = np.sqrt(gmm.variances)
    lik_c, lik_sd = x_t / np.sqrt(a), np.sqrt((1.0 - a) / a)
    lo = min(np.min(gmm.means[:, 0] - 6 * sd), lik_c - 6 * lik_sd)
    hi = max(np.max(gmm.means[:, 0] + 6 * sd), lik_c + 6 * lik_sd)
    x0 = np.linspace(lo, hi, nodes)
    prior = np.zeros_like(x0)
    for w, m, v in zip(gmm.weights, gmm.means[:, 0], gmm.variances):
        prior += w * np.exp(-0.5 * (x0 - m) ** 2 / v) / np.sqrt(2 * np.pi * v)
    lik = np.exp(-0.5 * (x_t - np.sqrt(a) * x0) ** 2 / (1.0 - a))
    wts = prior * lik
    return np.trapezoid(x0 * wts, x0) / np.trapezoid(wts, x0)


def check_posterior_quadrature(rng, n=30):
    worst = 0.0
    for _ in range(n):
        K = int(rng.integers(1, 3))
        w = rng.dirichlet(np.ones(K))
        gmm = GaussianMixture(w, rng.uniform(-3, 3, (K, 1)), rng.uniform(0.2, 2.0, K))
        T = int(rng.integers(1, 6))
        sched = NoiseSchedule.from_betas(rng.uniform(0.05, 0.5, T))
        t = int(rng.integers(1, T + 1))
        x_t = float(rng.uniform(-3, 3))
        got = posterior_mean_x0(gmm, np.array([x_t]), t, sched)[0]
        ref = trapezoid_posterior_mean(gmm, x_t, t, sched)
        worst = max(worst, abs(got - ref))
    return worst < 1e-6, f"max abs error {worst:.2e}"


def check_worked_example():
    sched = NoiseSchedule.from_betas([0.5, 0.5])
    gmm = GaussianMixture(np.ones(1), np.zeros((1, 1)), np.ones(1))
    f = oracle_reverse_mean(gmm, np.array([1.0]), 2, sched)[0]
    expected = np.sqrt(0.5) * 0.5 / 0.75 * 1.5
    return abs(f - expected) < 1e-14, f"f = {f:.15f}"


def check_step_vs_jump(seed, n=20_000):
    sched = build_linear(50)
    x0 = np.tile([1.0, -2.0], (n, 1))
    gen = np.random.default_rng(seed)
    s = Sample(x0, 0)
    for _ in range(30):
        s = forward_step(s, sched, gen)
    j = forward_jump(Sample(x0, 0), 30, sched, gen).x
    se = np.sqrt(s.x.var(0) / n + j.var(0) / n)
    z = np.max(np.abs(s.x.mean(0) - j.mean(0)) / se)
    return z < 4.0, f"max mean z-score {z:.2f}"


def check_backprop(seed):
    gen = np.random.default_rng(seed)
    sched = build_linear(100)
    den = new_denoiser(2, sched, hidden=(16, 16), rng=gen)
    for p in den.net.params[1::2]:
        p[:] = 0.1 * gen.standard_normal(p.shape)
    x = gen.standard_normal((8, 2))
    t = gen.integers(1, 101, size=8)
    err = gradient_check(den, x, t, gen.standard_normal((8, 2)), n_params=200, seed=seed)
    return err < 1e-4, f"max relative error {err:.2e}"


def run_all(seed: int = 0):
    rng = np.random.default_rng(seed)
    checks = [
        ("schedule cumulative products", lambda: check_schedule_products(rng)),
        ("posterior mean vs quadrature", lambda: check_posterior_quadrature(rng)),
        ("reverse-mean worked example", check_worked_example),
        ("forward step vs closed-form jump", lambda: check_step_vs_jump(seed)),
        ("backprop vs finite differences", lambda: check_backprop(seed)),
    ]
    out = []
    for name, fn in checks:
        ok, detail = fn()
        out.append((name, bool(ok), detail))
    return out
