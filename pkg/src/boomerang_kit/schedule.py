"""Diffusion noise schedules.

Arrays are stored 1-indexed with a padding entry at index 0 so that
``sched.betas[t]`` is the variance of forward step ``t``:

* ``betas[0] = 0`` (padding), ``betas[t]`` for ``t = 1..T``
* ``alphas[0] = 1``, ``alphas[t] = prod_{i<=t} (1 - betas[i])``
* ``bar_betas[0] = 0`` (padding), ``bar_betas[t] = (1 - alphas[t-1]) / (1 - alphas[t]) * betas[t]``

``alphas[0] = 1`` makes step 0 the clean data, so Boomerang at depth 0 is the
identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray = field(init=False)
    bar_betas: np.ndarray = field(init=False)
    beta_min: float | None = None
    beta_max: float | None = None

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=float)
        if betas.ndim != 1 or betas.size < 2:
            raise ValueError("betas must be a 1-d array of length T + 1 (index 0 is padding)")
        if betas[0] != 0.0:
            raise ValueError("betas[0] is padding and must be 0")
        b = betas[1:]
        if not np.all((b > 0) & (b < 1)):
            raise ValueError("every beta_t must lie in (0, 1)")
        alphas = np.concatenate([[1.0], np.cumprod(1.0 - b)])
        if alphas[-1] < np.finfo(float).tiny:
            raise ValueError("cumulative product alpha_T underflows to 0; shorten T or lower the betas")
        bar = np.zeros_like(betas)
        # 1 - alpha via expm1 stays accurate when beta is tiny
        one_minus = np.concatenate([[0.0], -np.expm1(np.cumsum(np.log1p(-b)))])
        bar[1:] = one_minus[:-1] / one_minus[1:] * b
        object.__setattr__(self, "betas", _frozen(betas))
        object.__setattr__(self, "alphas", _frozen(alphas))
        object.__setattr__(self, "bar_betas", _frozen(bar))

    @property
    def T(self) -> int:
        return self.betas.size - 1

    @classmethod
    def from_betas(cls, betas) -> "NoiseSchedule":
        """Build from the T per-step variances ``beta_1..beta_T``."""
        return cls(np.concatenate([[0.0], np.asarray(betas, dtype=float)]))

    def check_step(self, t: int, lo: int = 0) -> int:
        if not (lo <= t <= self.T):
            raise ValueError(f"step {t} outside [{lo}, {self.T}]")
        return int(t)

    def to_dict(self) -> dict:
        if self.beta_min is None:
            return {"kind": "custom", "T": self.T, "betas": self.betas[1:].tolist()}
        return {"kind": "linear", "T": self.T, "beta_min": self.beta_min, "beta_max": self.beta_max}


def build_linear(T: int, beta_min: float = 1e-4, beta_max: float = 0.02) -> NoiseSchedule:
    """Linear beta schedule from ``beta_min`` at t=1 to ``beta_max`` at t=T."""
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    if not (0 < beta_min <= beta_max < 1):
        raise ValueError(f"need 0 < beta_min <= beta_max < 1, got ({beta_min}, {beta_max})")
    T = int(T)
    betas = np.linspace(beta_min, beta_max, T) if T > 1 else np.array([beta_min])
    return NoiseSchedule(
        np.concatenate([[0.0], betas]), beta_min=float(beta_min), beta_max=float(beta_max)
    )


@dataclass(frozen=True, eq=False)
class StrideSchedule:
    """A strictly increasing subsequence of steps of ``base`` ending at T.

    ``effective_betas[k] = 1 - alpha[steps[k]] / alpha[steps[k-1]]`` with
    ``steps[-1]`` read as 0, so the cumulative product of ``1 - effective_betas``
    reproduces ``effective_alphas``.
    """

    base: NoiseSchedule
    steps: np.ndarray
    effective_alphas: np.ndarray = field(init=False)
    effective_betas: np.ndarray = field(init=False)

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.int64)
        T = self.base.T
        if steps.ndim != 1 or steps.size < 1:
            raise ValueError("stride steps must be a non-empty 1-d sequence")
        if steps[-1] != T or steps[0] < 1 or np.any(np.diff(steps) <= 0):
            raise ValueError("stride steps must be strictly increasing within [1, T] and end at T")
        steps.setflags(write=False)
        a = self.base.alphas[steps]
        prev = np.concatenate([[1.0], a[:-1]])
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "effective_alphas", _frozen(a))
        object.__setattr__(self, "effective_betas", _frozen(1.0 - a / prev))

    @property
    def S(self) -> int:
        return self.steps.size

    @property
    def T(self) -> int:
        return self.base.T

    def snap(self, t: int) -> int:
        """Number of stride steps at or below ``t`` (snapping toward 0)."""
        return int(np.searchsorted(self.steps, t, side="right"))

    def to_dict(self) -> dict:
        d = self.base.to_dict()
        d["kind"] = "stride" if d["kind"] == "linear" else d["kind"]
        d["stride_steps"] = self.steps.tolist()
        return d


def build_stride(sched: NoiseSchedule, S: int) -> StrideSchedule:
    """Evenly spaced (rounded) stride of ``S`` steps ending at T."""
    T = sched.T
    if int(S) != S or S < 1:
        raise ValueError(f"S must be a positive integer, got {S!r}")
    if S > T:
        raise ValueError(f"stride length S={S} exceeds T={T}")
    k = np.arange(1, S + 1)
    steps = np.floor(k * T / S + 0.5).astype(np.int64)
    steps[-1] = T
    return StrideSchedule(sched, steps)


def schedule_to_json(sched: NoiseSchedule | StrideSchedule) -> str:
    return json.dumps(sched.to_dict(), sort_keys=True)


def schedule_from_dict(d: dict) -> NoiseSchedule | StrideSchedule:
    kind = d.get("kind", "linear")
    if kind == "custom":
        base = NoiseSchedule.from_betas(d["betas"])
    else:
        base = build_linear(d["T"], d.get("beta_min", 1e-4), d.get("beta_max", 0.02))
    if kind == "stride" or d.get("stride_steps"):
        return StrideSchedule(base, d["stride_steps"])
    if kind not in ("linear", "custom"):
        raise ValueError(f"unknown schedule kind {kind!r}")
    return base


def schedule_from_json(text: str) -> NoiseSchedule | StrideSchedule:
    return schedule_from_dict(json.loads(text))
