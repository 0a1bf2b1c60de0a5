"""Desk-scale versions of the three Boomerang applications.

* anonymization: replace every record by its Boomerang output
* data augmentation: mix pre-generated Boomerang copies into classifier training
* perceptual resolution enhancement (PRE): interpolate a downsampled signal
  back to full size, then Boomerang (or cascade) it onto the data manifold
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forward import Sample
from .metrics import (
    locality_report, median_bandwidth, pairwise_distances, two_sample,
)
from .mlp import TrainConfig, train_classifier
from .rng import SeedStreams
from .sampler import BoomerangConfig, SampleTrace, boomerang, cascade
from .schedule import NoiseSchedule


def anonymize_dataset(dataset, t_boom: int, den, sched: NoiseSchedule, seed: int = 0,
                      threshold: float = 0.0, embed=None):
    """Boomerang every record; returns ``(anonymized, LocalityReport)``."""
    x0 = np.atleast_2d(np.asarray(dataset, dtype=float))
    out = boomerang(Sample(x0, 0), BoomerangConfig(t_boom=t_boom, seed=seed), den, sched).x
    a, b = (x0, out) if embed is None else (embed(x0), embed(out))
    report = locality_report(t_boom / sched.T, pairwise_distances(a, b), threshold, t_boom)
    return out, report


# -- augmentation ------------------------------------------------------------


@dataclass(frozen=True)
class AugmentationProtocol:
    t_boom: int
    mix_probability: float = 0.5
    pregenerated: bool = True

    def __post_init__(self):
        if not 0.0 <= self.mix_probability <= 1.0:
            raise ValueError("mix_probability must lie in [0, 1]")
        if not self.pregenerated:
            raise ValueError("only pre-generated augmentation copies are supported")


def default_classifier_config(seed: int = 0) -> TrainConfig:
    return TrainConfig(epochs=300, batch_size=16, lr=0.05, momentum=0.9,
                       hidden=(64, 64), seed=seed)


@dataclass
class AugmentationResult:
    seeds: list
    baseline: list = field(default_factory=list)
    boomerang: list = field(default_factory=list)
    synthetic: list = field(default_factory=list)

    @staticmethod
    def _summary(v):
        v = np.asarray(v, dtype=float)
        se = float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
        return float(np.mean(v)), se

    def summary(self) -> dict:
        return {name: self._summary(getattr(self, name))
                for name in ("baseline", "boomerang", "synthetic")}

    def rows(self):
        for i, s in enumerate(self.seeds):
            for name in ("baseline", "boomerang", "synthetic"):
                yield name, s, "accuracy", getattr(self, name)[i]


def _scarce_split(x, y, n_train, seed):
    if n_train is None or n_train >= x.shape[0]:
        return x, y
    rng = SeedStreams(seed).generator("train-subsample")
    idx = np.sort(rng.choice(x.shape[0], size=n_train, replace=False))
    return x[idx], y[idx]


def augmentation_eval(x_train, y_train, x_test, y_test, protocol: AugmentationProtocol,
                      den, sched: NoiseSchedule, n_seeds: int = 5, n_train: int | None = 64,
                      classifier: TrainConfig | None = None, seeds=None,
                      conditions=("baseline", "boomerang", "synthetic")) -> AugmentationResult:
    """Accuracy of (a) no augmentation, (b) Boomerang mixing, (c) synthetic only.

    Per seed: a label-scarce training set of ``n_train`` points is drawn from
    the pool, Boomerang copies are pre-generated at ``protocol.t_boom`` (and
    at ``T`` for condition (c)), and three classifiers are trained with the
    same initialization.  Copies inherit the label of their source point.
    Inputs are scaled by the training set's overall standard deviation.
    """
    y_train = np.asarray(y_train, dtype=np.int64)
    n_classes = int(max(y_train.max(), np.max(y_test))) + 1
    seeds = list(range(n_seeds)) if seeds is None else list(seeds)
    result = AugmentationResult(seeds=seeds)
    for s in seeds:
        xtr, ytr = _scarce_split(np.asarray(x_train, float), y_train, n_train, s)
        scale = float(np.std(xtr)) or 1.0
        cfg = classifier or default_classifier_config()
        cfg = TrainConfig(**{**cfg.__dict__, "seed": s})
        boom_seed = SeedStreams(s).child(0).seed
        if "baseline" in conditions:
            clf, _ = train_classifier(xtr / scale, ytr, n_classes, cfg)
            result.baseline.append(clf.accuracy(np.asarray(x_test) / scale, y_test))
        if "boomerang" in conditions:
            alt = boomerang(xtr, BoomerangConfig(protocol.t_boom, seed=boom_seed), den, sched).x
            clf, _ = train_classifier(xtr / scale, ytr, n_classes, cfg, alt_x=alt / scale,
                                      mix_probability=protocol.mix_probability)
            result.boomerang.append(clf.accuracy(np.asarray(x_test) / scale, y_test))
        if "synthetic" in conditions:
            syn = boomerang(xtr, BoomerangConfig(sched.T, seed=boom_seed), den, sched).x
            clf, _ = train_classifier(syn / scale, ytr, n_classes, cfg)
            result.synthetic.append(clf.accuracy(np.asarray(x_test) / scale, y_test))
    return result


def augmentation_sweep(x_train, y_train, x_test, y_test, ratios, den, sched: NoiseSchedule,
                       mix_probability: float = 0.5, **kwargs):
    """Seed-averaged accuracy of the mixing condition for each ``t_boom / T``."""
    out = {}
    for r in ratios:
        proto = AugmentationProtocol(int(round(r * sched.T)), mix_probability)
        res = augmentation_eval(x_train, y_train, x_test, y_test, proto, den, sched,
                                conditions=("boomerang",), **kwargs)
        out[r] = res.boomerang
    return out


# -- resolution enhancement --------------------------------------------------


def _check_factor(k):
    if int(k) != k or k < 2:
        raise ValueError(f"downsample factor must be an integer >= 2, got {k!r}")
    return int(k)


def downsample(x, k: int, ndim: int | None = None) -> np.ndarray:
    """Block-average the last ``ndim`` axes (default: all) by factor ``k``.

    Each axis length must be divisible by ``k``; there is no padding.
    """
    k = _check_factor(k)
    x = np.asarray(x, dtype=float)
    ndim = x.ndim if ndim is None else ndim
    lead = x.shape[: x.ndim - ndim]
    tail = x.shape[x.ndim - ndim:]
    if any(n % k for n in tail):
        raise ValueError(f"shape {tail} not divisible by {k}")
    split = []
    for n in tail:
        split += [n // k, k]
    y = x.reshape(*lead, *split)
    axes = tuple(len(lead) + 2 * i + 1 for i in range(ndim))
    return y.mean(axis=axes)


def _interp_axis(x, k, axis):
    n = x.shape[axis]
    if n == 1:
        return np.repeat(x, k, axis=axis)
    pos = (np.arange(n * k) + 0.5) / k - 0.5
    i0 = np.clip(np.floor(pos).astype(int), 0, n - 2)
    w = pos - i0
    shape = [1] * x.ndim
    shape[axis] = -1
    w = w.reshape(shape)
    return (1.0 - w) * np.take(x, i0, axis=axis) + w * np.take(x, i0 + 1, axis=axis)


def upsample_linear(x_ds, k: int, ndim: int | None = None) -> np.ndarray:
    """Separable linear interpolation by factor ``k`` over the last ``ndim`` axes.

    Sample centres are aligned: coarse sample ``i`` sits at fine position
    ``(i + 0.5) k - 0.5``.  Values past the outermost centres are linearly
    extrapolated, so ``downsample(upsample_linear(x, k), k) == x`` for any
    linear ramp.  E.g. ``[0, 2]`` with ``k = 2`` becomes ``[-0.5, 0.5, 1.5, 2.5]``.
    """
    k = _check_factor(k)
    x = np.asarray(x_ds, dtype=float)
    ndim = x.ndim if ndim is None else ndim
    for axis in range(x.ndim - ndim, x.ndim):
        x = _interp_axis(x, k, axis)
    return x


@dataclass
class PreTask:
    """A batch of ground-truth signals, their downsampled views and the
    interpolated estimates.  Signals are flat vectors of an image ``shape``."""

    x_true: np.ndarray
    k: int
    shape: tuple
    t_boom: int = 0
    n_cascade: int = 1
    x_ds: np.ndarray | None = None
    x_up: np.ndarray | None = None

    def __post_init__(self):
        self.k = _check_factor(self.k)
        self.x_true = np.atleast_2d(np.asarray(self.x_true, dtype=float))
        n = self.x_true.shape[0]
        if int(np.prod(self.shape)) != self.x_true.shape[1]:
            raise ValueError(f"x_true has dimension {self.x_true.shape[1]}, shape {self.shape}")
        imgs = self.x_true.reshape(n, *self.shape)
        if self.x_ds is None:
            self.x_ds = downsample(imgs, self.k, ndim=len(self.shape)).reshape(n, -1)
        if self.x_up is None:
            small = tuple(s // self.k for s in self.shape)
            ds = np.asarray(self.x_ds).reshape(n, *small)
            self.x_up = upsample_linear(ds, self.k, ndim=len(self.shape)).reshape(n, -1)
        if self.x_up.shape != self.x_true.shape:
            raise ValueError("x_up must have the same dimension as x_true")
        if self.n_cascade < 1:
            raise ValueError("n_cascade must be >= 1")


def pre_enhance(task: PreTask, den, sched: NoiseSchedule, seed: int = 0, clean=None,
                bandwidth: float | None = None, trace: SampleTrace | None = None):
    """Boomerang (or cascade) the interpolated batch; returns ``(enhanced, metrics)``.

    ``metrics`` holds MSE to the ground truth for the enhanced and interpolated
    batches and, when a ``clean`` reference batch is given, their MMD^2 to it.
    """
    cfg = BoomerangConfig(task.t_boom, task.n_cascade, seed)
    run = cascade if task.n_cascade > 1 else boomerang
    out = run(Sample(task.x_up, 0), cfg, den, sched, trace=trace).x
    metrics = {
        "mse": float(np.mean((out - task.x_true) ** 2)),
        "mse_interp": float(np.mean((task.x_up - task.x_true) ** 2)),
    }
    if clean is not None:
        bw = median_bandwidth(clean) if bandwidth is None else bandwidth
        metrics["bandwidth"] = bw
        metrics["mmd2"] = two_sample(out, clean, bw).mmd2
        metrics["mmd2_interp"] = two_sample(task.x_up, clean, bw).mmd2
    return out, metrics


def select_cascade(task: PreTask, den, sched: NoiseSchedule, total_steps: int, clean,
                   candidates=(1, 2, 4, 8), seed: int = 0, bandwidth: float | None = None):
    """Pick the cascade count with the lowest MMD^2 to ``clean`` at equal total steps.

    Each candidate ``n`` runs ``n`` passes of depth ``total_steps // n``.
    Returns ``(best_n, {n: metrics})``.
    """
    bw = median_bandwidth(clean) if bandwidth is None else bandwidth
    table = {}
    for n in candidates:
        if total_steps % n:
            continue
        sub = PreTask(task.x_true, task.k, task.shape, total_steps // n, n, task.x_ds, task.x_up)
        _, m = pre_enhance(sub, den, sched, seed=seed, clean=clean, bandwidth=bw)
        table[n] = m
    best = min(table, key=lambda n: (table[n]["mmd2"], n))
    return best, table
