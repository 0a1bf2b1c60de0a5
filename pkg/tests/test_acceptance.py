"""The ten acceptance criteria at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line (also collected into the pytest
terminal summary).  Run directly with ``python3 tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from boomerang_kit import (
    BoomerangConfig, GaussianMixture, NoiseSchedule, OracleDenoiser, PreTask, Sample, SampleTrace,
    boomerang, build_linear, forward_jump, forward_step, gradient_check, locality_sweep, pre_enhance,
    run_reverse, sample_global, select_cascade,
)
from boomerang_kit.apps import AugmentationProtocol, augmentation_eval, augmentation_sweep
from boomerang_kit.cli import cli_main
from boomerang_kit.datasets import BUMP_SIDE, bumps16, gauss1, gmm2, load_builtin
from boomerang_kit.metrics import median_bandwidth

from conftest import ACCEPTANCE_LINES, rms_vs_oracle
from test_mlp import _random_setup


def report(n, ok, detail, elapsed=None):
    t = "" if elapsed is None else f" [{elapsed:.1f}s]"
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}{t}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_schedule_algebra():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst, ok = 0.0, True
    for _ in range(50):
        T = int(rng.integers(1, 10_001))
        s = NoiseSchedule.from_betas(rng.uniform(1e-5, 0.02, T))
        prod, ref = 1.0, np.empty(T + 1)
        ref[0] = 1.0
        for t in range(1, T + 1):
            prod *= 1.0 - s.betas[t]
            ref[t] = prod
        worst = max(worst, float(np.max(np.abs(s.alphas - ref) / ref)))
        # 1 - alpha strictly increasing <=> alpha strictly decreasing; alpha keeps full
        # relative precision where 1 - alpha rounds to 1.0
        ok &= s.bar_betas[1] == 0.0 and bool(np.all(np.diff(s.alphas) < 0))
        ok &= bool(np.all(np.diff(1.0 - s.alphas) >= 0))
    el = time.perf_counter() - t0
    report(1, ok and worst < 1e-12 and el < 5,
           f"max rel err {worst:.2e} < 1e-12, bar_beta_1 = 0, 1-alpha increasing", el)


def test_criterion_2_step_vs_jump():
    t0 = time.perf_counter()
    sched = build_linear(100)
    n = 10_000
    x0, _ = gmm2().sample(n, np.random.default_rng(0))
    worst = 0.0
    for t in (10, 50, 100):
        s = Sample(x0, 0)
        rng = np.random.default_rng(t)
        for _ in range(t):
            s = forward_step(s, sched, rng)
        j = forward_jump(Sample(x0, 0), t, sched, np.random.default_rng(10_000 + t)).x
        a = s.x
        se_mean = np.sqrt(a.var(0) / n + j.var(0) / n)
        worst = max(worst, float(np.max(np.abs(a.mean(0) - j.mean(0)) / se_mean)))
        ca, cj = a - a.mean(0), j - j.mean(0)
        for p in range(2):
            for q in range(p, 2):
                pa, pj = ca[:, p] * ca[:, q], cj[:, p] * cj[:, q]
                se = np.sqrt(pa.var() / n + pj.var() / n)
                worst = max(worst, abs(pa.mean() - pj.mean()) / se)
    el = time.perf_counter() - t0
    report(2, worst < 4 and el < 30, f"max |diff|/SE over mean and cov = {worst:.2f} < 4", el)


def test_criterion_3_global_sampling():
    t0 = time.perf_counter()
    sched = build_linear(1000)
    n = 10_000
    x = sample_global(OracleDenoiser(gauss1(), sched), sched, 2, n, 0).x
    z = np.abs(x.mean(0)) / (x.std(0) / np.sqrt(n))
    var = x.var(0)
    g = gmm2()
    y = sample_global(OracleDenoiser(g, sched), sched, 2, n, 1).x
    nearest = np.argmin(((y[:, None, :] - g.means[None]) ** 2).sum(-1), axis=1)
    frac = np.bincount(nearest, minlength=2) / n
    el = time.perf_counter() - t0
    ok = bool(np.all(z < 3) and np.all((var >= 0.95) & (var <= 1.05))
              and np.all(np.abs(frac - g.weights) <= 0.05) and el < 120)
    report(3, ok, f"gauss1 mean z {np.round(z, 2)}, var {np.round(var, 4)}; gmm2 fractions {np.round(frac, 3)}", el)


def test_criterion_4_posterior_check():
    t0 = time.perf_counter()
    sched = build_linear(1000)
    prior = GaussianMixture(np.ones(1), np.zeros((1, 1)), np.ones(1))
    den = OracleDenoiser(prior, sched)
    n = 10_000
    worst, parts = 0.0, []
    for ratio in (0.3, 0.6):
        tb = int(ratio * 1000)
        a = sched.alphas[tb]
        # realize x_t once from the prior, then redraw the reverse chain n times
        x0 = np.random.default_rng(tb).standard_normal((1, 1))
        c = forward_jump(Sample(x0, 0), tb, sched, np.random.default_rng(tb + 1)).x[0, 0]
        out = run_reverse(Sample(np.full((n, 1), c), tb), den, sched, 1000 + tb).x[:, 0]
        # unit prior times N(x_t; sqrt(a) x0, 1 - a): mean sqrt(a) c, variance 1 - a
        mu, var = np.sqrt(a) * c, 1.0 - a
        zm = abs(out.mean() - mu) / np.sqrt(var / n)
        zv = abs(out.var() - var) / (var * np.sqrt(2.0 / n))
        worst = max(worst, zm, zv)
        parts.append(f"r={ratio}: mean z {zm:.2f}, var z {zv:.2f} (var {out.var():.4f} vs {var:.4f})")
    el = time.perf_counter() - t0
    report(4, worst < 4 and el < 60, "; ".join(parts), el)


def test_criterion_5_locality():
    t0 = time.perf_counter()
    sched = build_linear(1000)
    g = gmm2()
    # near saturation (alpha_700 ~ 7e-3) the 0.7 -> 0.9 gap is only ~0.15, so
    # 2-SE resolution needs well over the minimum 2000 pairs
    x0, _ = g.sample(20_000, np.random.default_rng(5))
    ratios = [0.1, 0.3, 0.5, 0.7, 0.9]
    reps = locality_sweep(x0, OracleDenoiser(g, sched), sched, ratios, seed=5)
    seps = [(b.mean_distance - a.mean_distance) / np.hypot(a.std_error, b.std_error)
            for a, b in zip(reps, reps[1:])]
    frac = reps[-1].frac_over_threshold
    el = time.perf_counter() - t0
    means = [round(r.mean_distance, 3) for r in reps]
    report(5, min(seps) >= 2 and frac > 0.9 and el < 120,
           f"means {means}, min separation {min(seps):.2f} SE, frac_over(0.9) {frac:.3f}", el)


def test_criterion_6_cost():
    sched = build_linear(1000)
    den = OracleDenoiser(gmm2(), sched)
    n = 1000
    x0, _ = gmm2().sample(n, np.random.default_rng(6))
    trace = SampleTrace()
    boomerang(x0, BoomerangConfig(500, seed=1), den, sched, trace=trace)
    steps_ok = trace.reverse_steps == 500
    t_boom, t_glob = [], []
    for rep in range(5):
        t0 = time.perf_counter()
        boomerang(x0, BoomerangConfig(500, seed=rep), den, sched)
        t_boom.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        sample_global(den, sched, 2, n, rep)
        t_glob.append(time.perf_counter() - t0)
    ratio = min(t_boom) / min(t_glob)
    report(6, steps_ok and 0.3 <= ratio <= 0.7,
           f"reverse steps {trace.reverse_steps} == 500, wall-clock ratio {ratio:.3f} in [0.3, 0.7]")


def test_criterion_7_mlp(trained_gauss1, gauss_oracle):
    t0 = time.perf_counter()
    worst = max(gradient_check(*_random_setup(s), n_params=200, seed=s) for s in range(20))
    den, _ = trained_gauss1
    rms = rms_vs_oracle(den, gauss_oracle)
    el = time.perf_counter() - t0
    report(7, worst < 1e-4 and rms < 0.05, f"max grad-check err {worst:.2e}, RMS(f_mlp - f_oracle) {rms:.4f}", el)


def test_criterion_8_augmentation(sched1000):
    t0 = time.perf_counter()
    x, y, g = load_builtin("spirals", 1000, np.random.default_rng(80))
    xt, yt, _ = load_builtin("spirals", 2000, np.random.default_rng(81))
    den = OracleDenoiser(g, sched1000)
    res = augmentation_eval(x, y, xt, yt, AugmentationProtocol(300), den, sched1000, n_seeds=5, n_train=64)
    s = res.summary()
    (ma, sa), (mb, _), (mc, _) = s["baseline"], s["boomerang"], s["synthetic"]
    ratios = [0.0, 0.25, 0.5, 0.75, 1.0]
    sweep = augmentation_sweep(x, y, xt, yt, ratios, den, sched1000, n_seeds=5, n_train=64)
    curve = [float(np.mean(sweep[r])) for r in ratios]
    best = int(np.argmax(curve))
    el = time.perf_counter() - t0
    ok = mb >= ma - sa and mb > mc and 0 < best < len(ratios) - 1 and el < 600
    report(8, ok, f"baseline {ma:.4f}+-{sa:.4f}, boomerang(0.3T) {mb:.4f}, synthetic {mc:.4f}; "
                  f"sweep {np.round(curve, 4).tolist()} peaks at ratio {ratios[best]}", el)


def test_criterion_9_pre(sched1000):
    t0 = time.perf_counter()
    g = bumps16()
    den = OracleDenoiser(g, sched1000)
    shape = (BUMP_SIDE, BUMP_SIDE)
    n = 300

    def batch(seed):
        r = np.random.default_rng(900 + seed)
        x_true, _ = g.sample(n, r)
        clean, _ = g.sample(n, r)
        return PreTask(x_true, 2, shape), clean, median_bandwidth(clean)

    # tune t_boom and n_cascade on a separate batch
    task, clean, bw = batch(0)
    grid = [20, 50, 100, 200, 300]
    tuned = {t: pre_enhance(PreTask(task.x_true, 2, shape, t, 1, task.x_ds, task.x_up), den, sched1000,
                            seed=0, clean=clean, bandwidth=bw)[1]["mmd2"] for t in grid}
    t_star = min(tuned, key=lambda t: (tuned[t], t))
    n_star, _ = select_cascade(task, den, sched1000, t_star, clean, (1, 2, 4, 8), seed=0, bandwidth=bw)

    better, diffs, parts = True, [], []
    for seed in (1, 2, 3):
        task, clean, bw = batch(seed)
        _, single = pre_enhance(PreTask(task.x_true, 2, shape, t_star, 1, task.x_ds, task.x_up),
                                den, sched1000, seed=seed, clean=clean, bandwidth=bw)
        _, casc = pre_enhance(PreTask(task.x_true, 2, shape, t_star // n_star, n_star, task.x_ds, task.x_up),
                              den, sched1000, seed=seed, clean=clean, bandwidth=bw)
        better &= single["mmd2"] < single["mmd2_interp"]
        diffs.append(casc["mmd2"] - single["mmd2"])
        parts.append(f"seed {seed}: interp {single['mmd2_interp']:.5f} single {single['mmd2']:.5f} "
                     f"cascade {casc['mmd2']:.5f}")
    d = np.array(diffs)
    se = d.std(ddof=1) / np.sqrt(d.size)
    cascade_ok = d.mean() <= 2 * se
    el = time.perf_counter() - t0
    report(9, bool(better and cascade_ok and el < 600),
           f"tuned t_boom {t_star}, n_cascade {n_star} (x{t_star // n_star} steps); " + "; ".join(parts)
           + f"; cascade - single {d.mean():.5f} <= 2 SE {2 * se:.5f}", el)


def test_criterion_10_reproducibility(tmp_path):
    import json

    sched = {"kind": "linear", "T": 200, "beta_min": 1e-4, "beta_max": 0.05}
    runs = {
        "sweep": {},
        "sample": {"n_samples": 200},
        "boomerang": {"t_boom": 60, "n_cascade": 2, "dataset": {"name": "gmm2", "n": 200}},
        "train": {"dataset": {"name": "moons", "n": 256}, "train": {"epochs": 5}},
        "augment-eval": {"dataset": {"name": "spirals"}, "augment": {"n_seeds": 2, "n_test": 300, "ratios": [0.25]}},
        "pre": {"pre": {"n": 40, "ratios": [0.1, 0.2], "cascade": [1, 2]}},
    }
    compared, same = 0, True
    for cmd, extra in runs.items():
        cfg = tmp_path / f"{cmd}.json"
        cfg.write_text(json.dumps({"schedule": sched, **extra}))
        outs = [tmp_path / f"{cmd}_{i}" for i in range(2)]
        for o in outs:
            assert cli_main([cmd, "--config", str(cfg), "--seed", "2024", "--out", str(o)]) == 0
        files = sorted(p.name for p in outs[0].glob("*.csv"))
        assert files
        for name in files:
            compared += 1
            same &= (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    report(10, same, f"{compared} CSV artifacts from {len(runs)} commands byte-identical on rerun")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
