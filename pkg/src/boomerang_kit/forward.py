"""Forward diffusion: the stepwise noising chain and its closed-form jump."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schedule import NoiseSchedule


@dataclass(frozen=True)
class Sample:
    """State ``x`` at diffusion step ``t`` (0 = clean data).

    ``x`` has shape ``(d,)`` for one chain or ``(n, d)`` for a batch of chains
    that all sit at the same step.
    """

    x: np.ndarray
    t: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim not in (1, 2) or x.shape[-1] < 1:
            raise ValueError(f"sample must have shape (d,) or (n, d), got {x.shape}")
        if self.t < 0:
            raise ValueError(f"step must be >= 0, got {self.t}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", int(self.t))

    @property
    def d(self) -> int:
        return self.x.shape[-1]


def forward_step(s: Sample, sched: NoiseSchedule, rng) -> Sample:
    """One step of the forward chain: ``sqrt(1 - beta_t) x + N(0, beta_t I)``."""
    t = s.t + 1
    if t > sched.T:
        raise ValueError(f"cannot step past T={sched.T} (sample is at t={s.t})")
    beta = sched.betas[t]
    eps = rng.standard_normal(s.x.shape)
    return Sample(np.sqrt(1.0 - beta) * s.x + np.sqrt(beta) * eps, t)


def forward_jump(x0: Sample, t_target: int, sched: NoiseSchedule, rng) -> Sample:
    """Draw ``x_t ~ q(x_t | x_0) = N(sqrt(alpha_t) x_0, (1 - alpha_t) I)`` in one shot."""
    if x0.t != 0:
        raise ValueError(f"forward_jump expects a clean sample (t=0), got t={x0.t}")
    t = sched.check_step(t_target)
    if t == 0:
        return Sample(x0.x.copy(), 0)
    a = sched.alphas[t]
    eps = rng.standard_normal(x0.x.shape)
    return Sample(np.sqrt(a) * x0.x + np.sqrt(1.0 - a) * eps, t)
