"""Reverse-process execution: global sampling, Boomerang and cascades.

Randomness is keyed through :class:`~boomerang_kit.rng.SeedStreams`:

* ``("prior",)``               starting noise of global sampling
* ``("jump", cascade)``        the one-shot forward jump of a Boomerang pass
* ``("reverse", cascade, t)``  the reverse-step noise at step ``t``

Chains in a batch take row ``i`` of each draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .denoiser import Denoiser
from .forward import Sample, forward_jump
from .rng import as_streams
from .schedule import NoiseSchedule, StrideSchedule


@dataclass(frozen=True)
class BoomerangConfig:
    t_boom: int
    n_cascade: int = 1
    seed: int = 0
    use_stride: StrideSchedule | None = None

    def __post_init__(self):
        if self.t_boom < 0:
            raise ValueError(f"t_boom must be >= 0, got {self.t_boom}")
        if self.n_cascade < 1:
            raise ValueError(f"n_cascade must be >= 1, got {self.n_cascade}")


@dataclass
class SampleTrace:
    """Optional record of a run; pass one in to have it filled."""

    reverse_steps: int = 0
    keep_states: bool = False
    states: list = field(default_factory=list)

    def record(self, s: Sample):
        self.reverse_steps += 1
        if self.keep_states:
            self.states.append(s)


def reverse_step(x_t: Sample, den: Denoiser, sched: NoiseSchedule, rng) -> Sample:
    """``x_{t-1} = f(x_t, t) + eta`` with ``eta ~ N(0, bar_beta_t I)``; no noise at t = 1."""
    t = x_t.t
    if t < 1:
        raise ValueError("cannot take a reverse step from t = 0")
    mean = den(x_t.x, t)
    if t > 1:
        mean = mean + np.sqrt(sched.bar_betas[t]) * rng.standard_normal(mean.shape)
    return Sample(mean, t - 1)


def _stride_jump(x_t: Sample, den: Denoiser, sched: NoiseSchedule, s: int, rng) -> Sample:
    # reverse jump t -> s on a stride; variance is the forward posterior's
    t = x_t.t
    mean = den.reverse_mean(x_t.x, t, s)
    if s > 0:
        a_t, a_s = sched.alphas[t], sched.alphas[s]
        var = (1.0 - a_s) / (1.0 - a_t) * (1.0 - a_t / a_s)
        mean = mean + np.sqrt(var) * rng.standard_normal(mean.shape)
    return Sample(mean, s)


def run_reverse(x_t: Sample, den: Denoiser, sched: NoiseSchedule | StrideSchedule, rng,
                cascade: int = 0, trace: SampleTrace | None = None) -> Sample:
    """Run the reverse chain from ``x_t.t`` down to 0.

    On a stride schedule ``x_t.t`` must be one of the stride steps (or 0).
    """
    streams = as_streams(rng)
    s = x_t
    if isinstance(sched, StrideSchedule):
        base = sched.base
        steps = sched.steps
        if s.t != 0 and s.t not in set(steps.tolist()):
            raise ValueError(f"t={s.t} is not a stride step")
        k = sched.snap(s.t)
        while k > 0:
            k -= 1
            target = int(steps[k - 1]) if k > 0 else 0
            s = _stride_jump(s, den, base, target, streams.generator("reverse", cascade, s.t))
            if trace is not None:
                trace.record(s)
        return s
    while s.t > 0:
        s = reverse_step(s, den, sched, streams.generator("reverse", cascade, s.t))
        if trace is not None:
            trace.record(s)
    return s


def sample_global(den: Denoiser, sched: NoiseSchedule | StrideSchedule, d: int, n: int, rng,
                  trace: SampleTrace | None = None) -> Sample:
    """``n`` samples by running the full reverse chain from ``x_T ~ N(0, I)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    streams = as_streams(rng)
    xT = streams.generator("prior").standard_normal((n, d))
    return run_reverse(Sample(xT, sched.T), den, sched, streams, trace=trace)


def _as_sample(x0) -> Sample:
    return x0 if isinstance(x0, Sample) else Sample(x0, 0)


def _boomerang_pass(x0: Sample, t_boom: int, den, sched, streams, cascade, trace):
    if isinstance(sched, StrideSchedule):
        k = sched.snap(t_boom)
        t_eff = int(sched.steps[k - 1]) if k > 0 else 0
        base = sched.base
    else:
        t_eff, base = t_boom, sched
    if t_eff == 0:
        return Sample(x0.x.copy(), 0)
    xt = forward_jump(x0, t_eff, base, streams.generator("jump", cascade))
    return run_reverse(xt, den, sched, streams, cascade=cascade, trace=trace)


def boomerang(x0, cfg: BoomerangConfig, den: Denoiser, sched: NoiseSchedule,
              trace: SampleTrace | None = None, rng=None) -> Sample:
    """One Boomerang pass: jump to ``t_boom`` in closed form, then reverse to 0.

    ``cfg.n_cascade`` is ignored here; see :func:`cascade`.  With
    ``cfg.use_stride`` set, ``t_boom`` snaps down to the nearest stride step.
    ``rng`` overrides ``cfg.seed`` (handy for pinned noise in tests).
    """
    x0 = _as_sample(x0)
    if x0.t != 0:
        raise ValueError("boomerang expects a clean sample (t = 0)")
    sched.check_step(cfg.t_boom)
    streams = as_streams(cfg.seed if rng is None else rng)
    active = cfg.use_stride if cfg.use_stride is not None else sched
    return _boomerang_pass(x0, cfg.t_boom, den, active, streams, 0, trace)


def cascade(x0, cfg: BoomerangConfig, den: Denoiser, sched: NoiseSchedule,
            trace: SampleTrace | None = None, rng=None) -> Sample:
    """Apply Boomerang ``cfg.n_cascade`` times, re-noising each pass's output."""
    x = _as_sample(x0)
    if x.t != 0:
        raise ValueError("cascade expects a clean sample (t = 0)")
    sched.check_step(cfg.t_boom)
    streams = as_streams(cfg.seed if rng is None else rng)
    active = cfg.use_stride if cfg.use_stride is not None else sched
    for c in range(cfg.n_cascade):
        x = _boomerang_pass(x, cfg.t_boom, den, active, streams, c, trace)
    return x
