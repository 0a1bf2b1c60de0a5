"""Gaussian-mixture targets and the closed-form oracle denoiser.

When ``p(x_0)`` is a mixture of isotropic Gaussians, every quantity the reverse
process needs is available in closed form: the noisy marginal at step ``t`` is
again a mixture, ``E[x_0 | x_t]`` is a responsibility-weighted sum of
conjugate posterior means, and the reverse mean follows from the forward
posterior ``q(x_{t-1} | x_t, x_0)``.  The oracle is the ground truth that the
trained network and every sampler test are checked against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .schedule import NoiseSchedule

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Mixture of ``K`` isotropic Gaussians ``N(means[k], variances[k] I)``.

    A zero variance is allowed and means a point mass at ``means[k]``.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        mu = np.asarray(self.means, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None] if w.size > 1 or mu.size == 1 else mu[None, :]
        var = np.broadcast_to(np.asarray(self.variances, dtype=float), w.shape).copy()
        if mu.shape[0] != w.size:
            raise ValueError(f"{w.size} weights but {mu.shape[0]} means")
        if np.any(w < 0) or abs(w.sum() - 1.0) >= 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        if np.any(var < 0) or not np.all(np.isfinite(var)):
            raise ValueError("component variances must be finite and >= 0")
        for name, a in (("weights", w), ("means", mu), ("variances", var)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def K(self) -> int:
        return self.weights.size

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def cov(self) -> np.ndarray:
        m = self.mean()
        diff = self.means - m
        return (diff.T * self.weights) @ diff + np.sum(self.weights * self.variances) * np.eye(self.d)

    def sample(self, n: int, rng: np.random.Generator):
        """Return ``(x, labels)`` with ``x`` of shape ``(n, d)``."""
        labels = rng.choice(self.K, size=n, p=self.weights)
        noise = rng.standard_normal((n, self.d))
        x = self.means[labels] + np.sqrt(self.variances[labels])[:, None] * noise
        return x, labels

    def _log_joint(self, x, scale, var):
        # log w_k + log N(x; scale * mu_k, var_k I), shape (n, K)
        x = np.atleast_2d(x)
        mu = scale * self.means
        sq = (
            np.sum(x * x, axis=1)[:, None]
            - 2.0 * x @ mu.T
            + np.sum(mu * mu, axis=1)[None, :]
        )
        sq = np.maximum(sq, 0.0)
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)
        return logw - 0.5 * sq / var - 0.5 * self.d * (LOG_2PI + np.log(var))

    def log_pdf(self, x) -> np.ndarray:
        """Log density; requires all variances > 0."""
        if np.any(self.variances <= 0):
            raise ValueError("log_pdf undefined for point-mass components")
        lj = self._log_joint(x, 1.0, self.variances)
        out = _logsumexp(lj)
        return out if np.ndim(x) == 2 else out[0]

    def responsibilities(self, x) -> np.ndarray:
        """Posterior component probabilities ``p(k | x)`` under the clean mixture."""
        return _softmax(self._log_joint(x, 1.0, np.maximum(self.variances, 1e-300)))

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixture":
        return cls(np.asarray(d["weights"]), np.asarray(d["means"]), np.asarray(d["variances"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GaussianMixture":
        return cls.from_dict(json.loads(text))


def _logsumexp(a):
    m = np.max(a, axis=1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return (m + np.log(np.sum(np.exp(a - m), axis=1, keepdims=True)))[:, 0]


def _softmax(a):
    m = np.max(a, axis=1, keepdims=True)
    e = np.exp(a - m)
    return e / np.sum(e, axis=1, keepdims=True)


def noisy_responsibilities(gmm: GaussianMixture, x_t, t: int, sched: NoiseSchedule):
    """Component posteriors ``p(k | x_t)`` under the step-``t`` marginal."""
    a = sched.alphas[t]
    var = a * gmm.variances + (1.0 - a)
    return _softmax(gmm._log_joint(x_t, np.sqrt(a), var))


def posterior_mean_x0(gmm: GaussianMixture, x_t, t: int, sched: NoiseSchedule) -> np.ndarray:
    """``E[x_0 | x_t]`` when ``x_0 ~ gmm`` and ``x_t ~ q(x_t | x_0)``."""
    sched.check_step(t, lo=1)
    x = np.asarray(x_t, dtype=float)
    x2 = np.atleast_2d(x)
    a = sched.alphas[t]
    sa = np.sqrt(a)
    var = a * gmm.variances + (1.0 - a)
    r = _softmax(gmm._log_joint(x2, sa, var))
    gain = sa * gmm.variances / var
    # sum_k r_k [mu_k + gain_k (x - sa mu_k)]
    out = r @ gmm.means + (r @ gain)[:, None] * x2 - sa * (r * gain) @ gmm.means
    return out if x.ndim == 2 else out[0]


def posterior_coefficients(sched: NoiseSchedule, t: int, s: int):
    """Weights ``(c_x0, c_xt)`` of the forward posterior mean for a jump ``t -> s``.

    ``E[x_s | x_t, x_0] = c_x0 x_0 + c_xt x_t``; for ``s = t - 1`` these are
    the usual one-step coefficients.
    """
    a_t, a_s = sched.alphas[t], sched.alphas[s]
    beta = 1.0 - a_t / a_s
    c_x0 = np.sqrt(a_s) * beta / (1.0 - a_t)
    c_xt = np.sqrt(1.0 - beta) * (1.0 - a_s) / (1.0 - a_t)
    return c_x0, c_xt


def oracle_reverse_mean(gmm: GaussianMixture, x_t, t: int, sched: NoiseSchedule, s: int | None = None):
    """Mean of the reverse transition with ``x_0`` replaced by ``E[x_0 | x_t]``."""
    s = t - 1 if s is None else s
    c_x0, c_xt = posterior_coefficients(sched, t, s)
    return c_x0 * posterior_mean_x0(gmm, x_t, t, sched) + c_xt * np.asarray(x_t, dtype=float)


class Denoiser:
    """Reverse-mean map ``f(x_t, t)``: the mean of ``p(x_{t-1} | x_t)``.

    Subclasses implement :meth:`reverse_mean`, which also covers the multi-step
    jumps ``t -> s`` used on stride schedules.  Evaluation is read-only.
    """

    schedule: NoiseSchedule

    def reverse_mean(self, x, t: int, s: int) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x, t: int) -> np.ndarray:
        return self.reverse_mean(x, t, t - 1)


class OracleDenoiser(Denoiser):
    """Exact reverse mean for a Gaussian-mixture target."""

    def __init__(self, gmm: GaussianMixture, schedule: NoiseSchedule):
        self.gmm = gmm
        self.schedule = schedule

    def predict_x0(self, x, t: int) -> np.ndarray:
        return posterior_mean_x0(self.gmm, x, t, self.schedule)

    def predict_eps(self, x, t: int) -> np.ndarray:
        a = self.schedule.alphas[t]
        return (np.asarray(x) - np.sqrt(a) * self.predict_x0(x, t)) / np.sqrt(1.0 - a)

    def reverse_mean(self, x, t: int, s: int) -> np.ndarray:
        return oracle_reverse_mean(self.gmm, x, t, self.schedule, s)
