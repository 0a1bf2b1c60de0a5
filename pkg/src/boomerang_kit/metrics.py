"""Distances, locality sweeps and two-sample statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import Sample
from .mlp import TrainConfig, train_classifier
from .sampler import BoomerangConfig, boomerang
from .schedule import NoiseSchedule

LOCALITY_HEADER = ("ratio", "mean_distance", "std_error", "frac_over_threshold")


@dataclass(frozen=True)
class LocalityReport:
    t_boom_ratio: float
    mean_distance: float
    std_error: float
    frac_over_threshold: float
    t_boom: int = 0
    n: int = 0

    def row(self):
        return (self.t_boom_ratio, self.mean_distance, self.std_error, self.frac_over_threshold)


@dataclass(frozen=True)
class TwoSampleReport:
    mean_diff: float
    cov_diff: float
    mmd2: float
    bandwidth: float
    n_a: int
    n_b: int


def pairwise_distances(a, b):
    """Row-wise Euclidean distances ``||a_i - b_i||``."""
    return np.linalg.norm(np.atleast_2d(a) - np.atleast_2d(b), axis=1)


def t_boom_for_ratio(ratio: float, T: int) -> int:
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio {ratio} outside [0, 1]")
    return int(round(ratio * T))


def percentile_threshold(distances, q: float = 5.0) -> float:
    return float(np.percentile(distances, q))


def locality_report(ratio, distances, threshold, t_boom=0) -> LocalityReport:
    d = np.asarray(distances, dtype=float)
    n = d.size
    se = float(np.std(d, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return LocalityReport(float(ratio), float(np.mean(d)), se,
                          float(np.mean(d > threshold)), t_boom, n)


def locality_sweep(dataset, den, sched: NoiseSchedule, ratios, threshold: float | None = None,
                   embed=None, seed: int = 0, return_distances: bool = False):
    """Boomerang every point at each ``t_boom / T`` ratio and summarize distances.

    Distances are Euclidean, in ``embed`` space when an embedding is given.
    With ``threshold=None`` the threshold is the 5th percentile of distances
    at the smallest positive ratio.
    """
    x0 = np.atleast_2d(np.asarray(dataset, dtype=float))
    if x0.shape[0] == 0:
        raise ValueError("empty dataset")
    ref = x0 if embed is None else embed(x0)
    all_d = []
    for i, r in enumerate(ratios):
        tb = t_boom_for_ratio(r, sched.T)
        cfg = BoomerangConfig(t_boom=tb, seed=seed)
        out = boomerang(Sample(x0, 0), cfg, den, sched).x
        emb = out if embed is None else embed(out)
        all_d.append(pairwise_distances(ref, emb))
    if threshold is None:
        positive = [i for i, r in enumerate(ratios) if r > 0]
        if positive:
            i_min = min(positive, key=lambda i: ratios[i])
            threshold = percentile_threshold(all_d[i_min])
        else:
            threshold = 0.0
    reports = [locality_report(r, d, threshold, t_boom_for_ratio(r, sched.T))
               for r, d in zip(ratios, all_d)]
    if return_distances:
        return reports, threshold, all_d
    return reports


def median_bandwidth(a, b=None) -> float:
    """Median pairwise distance of the pooled sample (at most 1000 points)."""
    z = np.atleast_2d(a) if b is None else np.vstack([a, b])
    if z.shape[0] > 1000:
        z = z[np.linspace(0, z.shape[0] - 1, 1000).astype(int)]
    sq = _sqdist(z, z)
    iu = np.triu_indices(z.shape[0], k=1)
    med = float(np.sqrt(np.median(sq[iu])))
    return med if med > 0 else 1.0


def _sqdist(a, b):
    sq = np.sum(a * a, axis=1)[:, None] - 2.0 * a @ b.T + np.sum(b * b, axis=1)[None, :]
    return np.maximum(sq, 0.0)


def _cross_term(kab, m, n):
    # equal sizes: paired U-statistic (drops i == j), which is exactly 0 for a == b
    if m == n:
        return (kab.sum() - np.trace(kab)) / (m * (m - 1))
    return kab.mean()


def mmd2_unbiased(a, b, bandwidth: float) -> float:
    """Unbiased MMD^2 with kernel ``exp(-||u - v||^2 / (2 bandwidth^2))``."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    m, n = a.shape[0], b.shape[0]
    if m < 2 or n < 2:
        raise ValueError("unbiased MMD needs at least two points per sample")
    g = -0.5 / bandwidth**2
    kaa = np.exp(g * _sqdist(a, a))
    kbb = np.exp(g * _sqdist(b, b))
    kab = np.exp(g * _sqdist(a, b))
    saa = (kaa.sum() - np.trace(kaa)) / (m * (m - 1))
    sbb = (kbb.sum() - np.trace(kbb)) / (n * (n - 1))
    return float(saa + sbb - 2.0 * _cross_term(kab, m, n))


def two_sample(a, b, bandwidth: float | None = None) -> TwoSampleReport:
    a, b = np.atleast_2d(np.asarray(a, dtype=float)), np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("both samples must be non-empty")
    bw = median_bandwidth(a, b) if bandwidth is None else float(bandwidth)
    if bw <= 0:
        raise ValueError("bandwidth must be positive")
    mean_diff = float(np.linalg.norm(a.mean(0) - b.mean(0)))
    ca = np.atleast_2d(np.cov(a, rowvar=False)) if a.shape[0] > 1 else np.zeros((a.shape[1],) * 2)
    cb = np.atleast_2d(np.cov(b, rowvar=False)) if b.shape[0] > 1 else np.zeros((b.shape[1],) * 2)
    cov_diff = float(np.linalg.norm(ca - cb, "fro"))
    mmd = mmd2_unbiased(a, b, bw) if min(a.shape[0], b.shape[0]) > 1 else float("nan")
    return TwoSampleReport(mean_diff, cov_diff, mmd, bw, a.shape[0], b.shape[0])


def mmd_permutation_null(a, b, bandwidth: float, n_perm: int = 200, seed: int = 0):
    """MMD^2 values under random relabelings of the pooled sample."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    z = np.vstack([a, b])
    m, N = a.shape[0], z.shape[0]
    K = np.exp(-0.5 / bandwidth**2 * _sqdist(z, z))
    np.fill_diagonal(K, 0.0)
    rng = np.random.default_rng(seed)
    n = N - m
    out = np.empty(n_perm)
    for i in range(n_perm):
        p = rng.permutation(N)
        ia, ib = p[:m], p[m:]
        out[i] = (K[np.ix_(ia, ia)].sum() / (m * (m - 1))
                  + K[np.ix_(ib, ib)].sum() / (n * (n - 1))
                  - 2.0 * _cross_term(K[np.ix_(ia, ib)], m, n))
    return out


def train_embedding(x, labels, config: TrainConfig | None = None, holdout: float = 0.25):
    """Train a small classifier; its penultimate layer is the embedding.

    Returns ``(embed, held_out_accuracy, classifier)`` where ``embed`` maps an
    ``(n, d)`` array to features.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least two classes")
    cfg = config or TrainConfig(epochs=60, batch_size=64, lr=0.05, hidden=(32, 16))
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(5,)))
    perm = rng.permutation(x.shape[0])
    n_test = max(1, int(round(holdout * x.shape[0])))
    test, train = perm[:n_test], perm[n_test:]
    clf, _ = train_classifier(x[train], y[train], int(y.max()) + 1, cfg)
    return clf.embed, clf.accuracy(x[test], y[test]), clf

