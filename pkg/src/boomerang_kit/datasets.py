"""Builtin toy datasets.

``gauss1``  standard Gaussian in 2-d
``gmm2``    two components at +-3 e_1, variance 0.5, equal weights (2-d)
``moons``   two interleaved half circles with Gaussian noise 0.1
``spirals`` two labeled spiral arms built from small components (see :func:`spirals`)
``bumps16`` 16x16 grayscale images holding one Gaussian bump; centers on the
            integer grid 2..13, widths {1, 1.5, 2}.  The distribution is a
            432-component mixture with small pixel noise, so the oracle
            denoiser is exact for it.
"""

from __future__ import annotations

import numpy as np

from .denoiser import GaussianMixture

BUMP_SIDE = 16


def gauss1(d: int = 2) -> GaussianMixture:
    return GaussianMixture(np.ones(1), np.zeros((1, d)), np.ones(1))


def gmm2(d: int = 2, sep: float = 3.0, variance: float = 0.5) -> GaussianMixture:
    means = np.zeros((2, d))
    means[0, 0], means[1, 0] = sep, -sep
    return GaussianMixture(np.array([0.5, 0.5]), means, np.full(2, variance))


def make_moons(n: int, rng: np.random.Generator, noise: float = 0.1):
    """Return ``(x, labels)`` for the two-moons set."""
    n_top = n // 2
    n_bot = n - n_top
    a = np.pi * rng.random(n_top)
    b = np.pi * rng.random(n_bot)
    top = np.stack([np.cos(a), np.sin(a)], axis=1)
    bot = np.stack([1.0 - np.cos(b), 0.5 - np.sin(b)], axis=1)
    x = np.concatenate([top, bot]) + noise * rng.standard_normal((n, 2))
    y = np.concatenate([np.zeros(n_top, dtype=np.int64), np.ones(n_bot, dtype=np.int64)])
    return x, y


def bump_image(cy: float, cx: float, width: float, side: int = BUMP_SIDE) -> np.ndarray:
    r, c = np.mgrid[0:side, 0:side]
    return np.exp(-((r - cy) ** 2 + (c - cx) ** 2) / (2.0 * width**2))


def bumps16(variance: float = 1e-3, widths=(1.0, 1.5, 2.0), margin: int = 2) -> GaussianMixture:
    centers = range(margin, BUMP_SIDE - margin)
    imgs = [bump_image(cy, cx, w).ravel() for w in widths for cy in centers for cx in centers]
    K = len(imgs)
    return GaussianMixture(np.full(K, 1.0 / K), np.array(imgs), np.full(K, variance))


BUILTIN_MIXTURES = {"gauss1": gauss1, "gmm2": gmm2, "bumps16": bumps16}


def load_builtin(name: str, n: int, rng: np.random.Generator):
    """Sample ``n`` points of a builtin dataset; returns ``(x, labels, mixture_or_None)``."""
    if name == "moons":
        x, y = make_moons(n, rng)
        return x, y, None
    if name == "spirals":
        gmm, arm = spirals()
        x, k = gmm.sample(n, rng)
        return x, arm[k], gmm
    if name not in BUILTIN_MIXTURES:
        raise ValueError(f"unknown dataset {name!r}; choose from gauss1, gmm2, moons, spirals, bumps16")
    gmm = BUILTIN_MIXTURES[name]()
    x, y = gmm.sample(n, rng)
    return x, y, gmm


def spirals(arm_scale: float = 2.0, variance: float = 0.25, spacing: float = 1.0):
    """Two interleaved spiral arms, each a chain of Gaussian components.

    Arm ``c`` follows ``r = arm_scale * theta`` rotated by ``c * pi`` for theta
    in ``[pi/2, 3 pi)``, with components every ``spacing`` units of arc length.
    Returns ``(mixture, component_labels)``; the label of a component is its arm.
    """
    means, labels = [], []
    for c in (0, 1):
        th = np.pi / 2
        while th < 3 * np.pi:
            r = arm_scale * th
            means.append([r * np.cos(th + c * np.pi), r * np.sin(th + c * np.pi)])
            labels.append(c)
            th += spacing / r
    K = len(means)
    gmm = GaussianMixture(np.full(K, 1.0 / K), np.array(means), np.full(K, variance))
    return gmm, np.array(labels, dtype=np.int64)
