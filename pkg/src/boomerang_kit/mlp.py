"""Small fully-connected networks with hand-written backpropagation.

One :class:`MLP` class serves both the noise-prediction denoiser and the toy
classifiers used for embeddings and augmentation experiments.  Hidden layers
use ``tanh``; the output layer is linear.  Weights are stored ``(fan_in,
fan_out)`` so a batch ``x`` of shape ``(n, fan_in)`` maps as ``x @ W + b``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .denoiser import Denoiser
from .schedule import NoiseSchedule

MAGIC = b"BMRK1"


class NumericalError(RuntimeError):
    """Training produced a non-finite loss or parameter."""


class MLP:
    def __init__(self, widths, rng: np.random.Generator | None = None, zero: bool = False):
        self.widths = [int(w) for w in widths]
        if len(self.widths) < 2:
            raise ValueError("need at least input and output widths")
        self.params = []
        for fan_in, fan_out in zip(self.widths[:-1], self.widths[1:]):
            if zero or rng is None:
                W = np.zeros((fan_in, fan_out))
            else:
                W = rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)
            self.params += [W, np.zeros(fan_out)]

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2

    def copy(self) -> "MLP":
        other = MLP.__new__(MLP)
        other.widths = list(self.widths)
        other.params = [p.copy() for p in self.params]
        return other

    def forward(self, x, upto: int | None = None):
        """Return ``(output, cache)``; ``upto`` stops after that many layers."""
        h = np.atleast_2d(x)
        cache = [h]
        L = self.n_layers if upto is None else upto
        for i in range(L):
            W, b = self.params[2 * i], self.params[2 * i + 1]
            z = h @ W + b
            h = np.tanh(z) if i < self.n_layers - 1 else z
            cache.append(h)
        return h, cache

    def backward(self, cache, dout):
        grads = [None] * len(self.params)
        g = dout
        for i in reversed(range(self.n_layers)):
            h_in, h_out = cache[i], cache[i + 1]
            if i < self.n_layers - 1:
                g = g * (1.0 - h_out * h_out)
            grads[2 * i] = h_in.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            if i > 0:
                g = g @ self.params[2 * i].T
        return grads

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params)


def time_features(t, T: int, width: int = 16) -> np.ndarray:
    """Sinusoidal features of ``t / T``; the lowest frequency is a half period,
    which keeps the map injective on ``(0, 1]``."""
    u = np.atleast_1d(np.asarray(t, dtype=float)) / T
    freqs = 0.5 * 2.0 ** np.arange(width // 2)
    ang = 2.0 * np.pi * u[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


class MlpDenoiser(Denoiser):
    """Noise-prediction network with a fixed conversion to the reverse mean.

    ``f(x_t, t) = (x_t - beta_t / sqrt(1 - alpha_t) * eps_hat) / sqrt(1 - beta_t)``

    The network sees ``x_t / sqrt(alpha_t * data_var + 1 - alpha_t)``, i.e.
    ``x_t`` scaled to roughly unit variance at every step, followed by the
    sinusoidal time features.
    """

    def __init__(self, net: MLP, schedule: NoiseSchedule, n_time: int = 16,
                 data_var: float = 1.0):
        self.net = net
        self.schedule = schedule
        self.n_time = n_time
        self.data_var = float(data_var)

    @property
    def d(self) -> int:
        return self.net.widths[-1]

    def inputs(self, x, t):
        x = np.atleast_2d(x)
        t = np.broadcast_to(np.asarray(t), (x.shape[0],))
        a = self.schedule.alphas[t][:, None]
        scaled = x / np.sqrt(a * self.data_var + 1.0 - a)
        return np.concatenate([scaled, time_features(t, self.schedule.T, self.n_time)], axis=1)

    def predict_eps(self, x, t) -> np.ndarray:
        out, _ = self.net.forward(self.inputs(x, t))
        return out if np.ndim(x) == 2 else out[0]

    def reverse_mean(self, x, t: int, s: int) -> np.ndarray:
        sched = self.schedule
        x = np.asarray(x, dtype=float)
        beta = sched.betas[t] if s == t - 1 else 1.0 - sched.alphas[t] / sched.alphas[s]
        eps = self.predict_eps(x, t)
        return (x - beta / np.sqrt(1.0 - sched.alphas[t]) * eps) / np.sqrt(1.0 - beta)

    def predict_x0(self, x, t) -> np.ndarray:
        a = self.schedule.alphas[t]
        return (np.asarray(x) - np.sqrt(1.0 - a) * self.predict_eps(x, t)) / np.sqrt(a)


def mlp_forward(den: MlpDenoiser, x_t, t: int):
    """Return ``(eps_hat, f_value)`` for one step."""
    if t < 1:
        raise ValueError("the reverse mean is defined for t >= 1")
    sched = den.schedule
    eps = den.predict_eps(x_t, t)
    beta = sched.betas[t]
    f = (np.asarray(x_t) - beta / np.sqrt(1.0 - sched.alphas[t]) * eps) / np.sqrt(1.0 - beta)
    return eps, f


def new_denoiser(d: int, schedule: NoiseSchedule, hidden=(128, 128), n_time: int = 16,
                 rng: np.random.Generator | None = None, zero: bool = False,
                 data_var: float = 1.0) -> MlpDenoiser:
    net = MLP([d + n_time, *hidden, d], rng=rng, zero=zero)
    return MlpDenoiser(net, schedule, n_time, data_var)


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 128
    lr: float = 1e-2
    momentum: float = 0.9
    seed: int = 0
    hidden: tuple = (128, 128)
    n_time: int = 16
    extra: dict = field(default_factory=dict)


class _Momentum:
    def __init__(self, params, lr, momentum):
        self.lr, self.mu = lr, momentum
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        for p, g, v in zip(params, grads, self.v):
            v *= self.mu
            v -= self.lr * g
            p += v


def eps_loss_and_grads(den: MlpDenoiser, x_t, t, eps):
    """Mean over the batch of ``||eps - eps_hat||^2`` and its parameter gradients."""
    out, cache = den.net.forward(den.inputs(x_t, t))
    diff = out - eps
    n = diff.shape[0]
    loss = float(np.sum(diff * diff) / n)
    grads = den.net.backward(cache, 2.0 * diff / n)
    return loss, grads


def train_mlp(data, sched: NoiseSchedule, config: TrainConfig | None = None,
              init: MlpDenoiser | None = None):
    """Fit an epsilon-prediction denoiser; returns ``(denoiser, per-epoch losses)``.

    Each minibatch draws ``t`` uniformly from ``1..T`` and ``eps ~ N(0, I)`` and
    regresses ``eps`` from ``sqrt(alpha_t) x_0 + sqrt(1 - alpha_t) eps``.
    """
    cfg = config or TrainConfig()
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[0] == 0:
        raise ValueError("training data is empty")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
    if init is None:
        data_var = float(np.mean(np.var(data, axis=0)))
        den = new_denoiser(data.shape[1], sched, cfg.hidden, cfg.n_time, rng=rng, data_var=data_var)
    else:
        den = MlpDenoiser(init.net.copy(), sched, init.n_time, init.data_var)
    opt = _Momentum(den.net.params, cfg.lr, cfg.momentum)
    n = data.shape[0]
    n_batches = -(-n // cfg.batch_size)
    losses = []
    for epoch in range(cfg.epochs):
        # full-size batches; datasets smaller than a batch are tiled
        order = np.concatenate([rng.permutation(n) for _ in range(-(-cfg.batch_size // n))])
        if order.size < n_batches * cfg.batch_size:
            order = np.resize(order, n_batches * cfg.batch_size)
        total = 0.0
        for b in range(n_batches):
            x0 = data[order[b * cfg.batch_size:(b + 1) * cfg.batch_size]]
            t = rng.integers(1, sched.T + 1, size=x0.shape[0])
            eps = rng.standard_normal(x0.shape)
            a = sched.alphas[t][:, None]
            xt = np.sqrt(a) * x0 + np.sqrt(1.0 - a) * eps
            loss, grads = eps_loss_and_grads(den, xt, t, eps)
            if not np.isfinite(loss):
                raise NumericalError(f"loss became {loss} at epoch {epoch}")
            opt.step(den.net.params, grads)
            total += loss
        if not den.net.all_finite():
            raise NumericalError(f"non-finite parameters after epoch {epoch}")
        losses.append(total / n_batches)
    return den, np.array(losses)


def gradient_check(den: MlpDenoiser, x_t, t, eps_target, n_params: int = 200,
                   h: float = 1e-5, seed: int = 0, which: str = "all") -> float:
    """Max relative error between backprop and central differences.

    Checks a random subsample of ``n_params`` parameters (``which="bias"``
    restricts to bias vectors).
    """
    x_t = np.atleast_2d(x_t)
    eps_target = np.atleast_2d(eps_target)
    _, grads = eps_loss_and_grads(den, x_t, t, eps_target)
    idx = [(i, j) for i, p in enumerate(den.net.params)
           if which == "all" or (which == "bias" and i % 2 == 1)
           for j in range(p.size)]
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(idx), size=min(n_params, len(idx)), replace=False)
    worst = 0.0
    for k in np.sort(pick):
        i, j = idx[k]
        p = den.net.params[i].reshape(-1)
        old = p[j]
        p[j] = old + h
        up, _ = eps_loss_and_grads(den, x_t, t, eps_target)
        p[j] = old - h
        down, _ = eps_loss_and_grads(den, x_t, t, eps_target)
        p[j] = old
        numeric = (up - down) / (2.0 * h)
        analytic = grads[i].reshape(-1)[j]
        worst = max(worst, abs(analytic - numeric) / (abs(numeric) + 1e-8))
    return worst


# -- classifiers -----------------------------------------------------------


class Classifier:
    def __init__(self, net: MLP):
        self.net = net

    def logits(self, x):
        return self.net.forward(x)[0]

    def predict(self, x):
        return np.argmax(self.logits(x), axis=1)

    def accuracy(self, x, y) -> float:
        return float(np.mean(self.predict(x) == np.asarray(y)))

    def embed(self, x):
        """Penultimate-layer activations."""
        return self.net.forward(x, upto=self.net.n_layers - 1)[0]


def _xent_grads(net, x, y):
    out, cache = net.forward(x)
    out = out - out.max(axis=1, keepdims=True)
    p = np.exp(out)
    p /= p.sum(axis=1, keepdims=True)
    n = x.shape[0]
    loss = float(-np.mean(np.log(p[np.arange(n), y] + 1e-300)))
    p[np.arange(n), y] -= 1.0
    return loss, net.backward(cache, p / n)


def train_classifier(x, y, n_classes: int, config: TrainConfig, alt_x=None,
                     mix_probability: float = 0.0):
    """Softmax classifier trained with momentum SGD.

    If ``alt_x`` is given, every epoch each example is independently replaced
    by its row of ``alt_x`` with probability ``mix_probability``.  The choices
    come from their own stream of ``config.seed``, so ``mix_probability=0``
    reproduces the unmixed run bit for bit.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if not 0.0 <= mix_probability <= 1.0:
        raise ValueError("mix_probability must lie in [0, 1]")
    init_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(2,)))
    order_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(3,)))
    mix_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(4,)))
    net = MLP([x.shape[1], *config.hidden, n_classes], rng=init_rng)
    opt = _Momentum(net.params, config.lr, config.momentum)
    weight_decay = config.extra.get("weight_decay", 0.0)
    n = x.shape[0]
    losses = []
    for epoch in range(config.epochs):
        xe = x
        if alt_x is not None:
            swap = mix_rng.random(n) < mix_probability
            xe = np.where(swap[:, None], alt_x, x)
        order = order_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            b = order[start:start + config.batch_size]
            loss, grads = _xent_grads(net, xe[b], y[b])
            if not np.isfinite(loss):
                raise NumericalError(f"classifier loss became {loss} at epoch {epoch}")
            if weight_decay:
                grads = [g + weight_decay * p if i % 2 == 0 else g
                         for i, (g, p) in enumerate(zip(grads, net.params))]
            opt.step(net.params, grads)
            total += loss * b.size
        losses.append(total / n)
    if not net.all_finite():
        raise NumericalError("non-finite classifier parameters")
    return Classifier(net), np.array(losses)


# -- checkpoints -----------------------------------------------------------


def save_checkpoint(path, den: MlpDenoiser) -> None:
    """``BMRK1`` + little-endian uint32 header + float64 parameters.

    Header: number of layer widths ``L``, the ``L`` widths, time-feature width,
    schedule length ``T``.  Parameters follow in order ``data_var, W1, b1, W2,
    b2, ...`` with each ``W`` row-major of shape ``(fan_in, fan_out)``.
    """
    w = den.net.widths
    header = struct.pack(f"<I{len(w)}III", len(w), *w, den.n_time, den.schedule.T)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header)
        fh.write(np.array([den.data_var], dtype="<f8").tobytes())
        for p in den.net.params:
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path, schedule: NoiseSchedule) -> MlpDenoiser:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:5] != MAGIC:
        raise ValueError(f"{path}: not a BMRK1 checkpoint")
    off = 5
    (L,) = struct.unpack_from("<I", blob, off)
    off += 4
    widths = struct.unpack_from(f"<{L}I", blob, off)
    off += 4 * L
    n_time, T = struct.unpack_from("<II", blob, off)
    off += 8
    if T != schedule.T:
        raise ValueError(f"checkpoint was trained with T={T}, schedule has T={schedule.T}")
    if off + 8 > len(blob):
        raise ValueError(f"{path}: truncated checkpoint")
    (data_var,) = struct.unpack_from("<d", blob, off)
    off += 8
    net = MLP(widths, zero=True)
    for i, p in enumerate(net.params):
        nbytes = p.size * 8
        if off + nbytes > len(blob):
            raise ValueError(f"{path}: truncated checkpoint")
        net.params[i] = np.frombuffer(blob, dtype="<f8", count=p.size, offset=off).reshape(p.shape).copy()
        off += nbytes
    if off != len(blob):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return MlpDenoiser(net, schedule, n_time, data_var)
