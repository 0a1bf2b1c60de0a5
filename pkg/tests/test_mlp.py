import numpy as np
import pytest

from boomerang_kit import (
    MlpDenoiser, NumericalError, OracleDenoiser, TrainConfig, build_linear, gradient_check,
    load_checkpoint, mlp_forward, save_checkpoint, train_mlp,
)
from boomerang_kit.datasets import make_moons
from boomerang_kit.metrics import train_embedding
from boomerang_kit.mlp import MLP, Classifier, new_denoiser, time_features, train_classifier

from conftest import rms_vs_oracle


def _random_setup(seed, T=50):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    hidden = tuple(int(h) for h in rng.integers(2, 9, size=int(rng.integers(1, 3))))
    sched = build_linear(T)
    den = new_denoiser(d, sched, hidden, n_time=4, rng=rng, data_var=float(rng.uniform(0.5, 2)))
    n = int(rng.integers(1, 6))
    x = rng.standard_normal((n, d))
    t = rng.integers(1, T + 1, size=n)
    eps = rng.standard_normal((n, d))
    return den, x, t, eps


@pytest.mark.parametrize("seed", range(20))
def test_gradient_check_random_configs(seed):
    den, x, t, eps = _random_setup(seed)
    assert gradient_check(den, x, t, eps, n_params=200, seed=seed) < 1e-4


def test_gradient_check_zero_network_bias():
    sched = build_linear(10)
    den = new_denoiser(2, sched, (8, 8), n_time=4, zero=True)
    x = np.zeros((3, 2))
    eps = np.random.default_rng(0).standard_normal((3, 2))
    assert gradient_check(den, x, np.array([1, 5, 10]), eps, which="bias") < 1e-6


def test_gradient_check_deterministic():
    den, x, t, eps = _random_setup(3)
    assert gradient_check(den, x, t, eps, seed=4) == gradient_check(den, x, t, eps, seed=4)


def test_time_features_injective():
    f = time_features(np.arange(1, 1001), 1000)
    assert f.shape == (1000, 16)
    d = np.linalg.norm(f[:, None] - f[None], axis=-1)
    np.fill_diagonal(d, np.inf)
    assert d.min() > 1e-4


def test_conversion_identity_with_exact_eps(sched100):
    # feeding the true eps through the conversion gives the oracle mean for a point-mass prior
    den = new_denoiser(2, sched100, (4,), zero=True)
    x = np.array([[0.3, -0.2]])
    eps, f = mlp_forward(den, x, 7)
    np.testing.assert_array_equal(eps, 0.0)
    np.testing.assert_allclose(f, x / np.sqrt(1 - sched100.betas[7]), rtol=1e-15)
    with pytest.raises(ValueError):
        mlp_forward(den, x, 0)


def test_zero_epochs_returns_initialization(sched100):
    data = np.random.default_rng(0).standard_normal((50, 2))
    a, losses = train_mlp(data, sched100, TrainConfig(epochs=0, seed=3, hidden=(8,)))
    rng = np.random.default_rng(np.random.SeedSequence(3, spawn_key=(1,)))
    b = new_denoiser(2, sched100, (8,), rng=rng)
    assert losses.size == 0
    np.testing.assert_array_equal(a.net.flat(), b.net.flat())


def test_single_point_learns_exact_eps(sched1000):
    den, _ = train_mlp(np.zeros((256, 2)), sched1000, TrainConfig(epochs=1000, seed=0))
    rng = np.random.default_rng(5)
    errs = []
    for t in (600, 800, 1000):
        x = np.sqrt(1 - sched1000.alphas[t]) * rng.standard_normal((500, 2))
        errs.append(np.mean((den.predict_eps(x, t) - x / np.sqrt(1 - sched1000.alphas[t])) ** 2))
    assert np.sqrt(np.mean(errs)) < 0.1


def test_moons_loss_decreases(sched1000):
    x, _ = make_moons(2000, np.random.default_rng(0))
    _, losses = train_mlp(x, sched1000, TrainConfig(epochs=60, seed=0))
    smooth = np.convolve(losses, np.ones(5) / 5, mode="valid")
    assert smooth[-1] < losses[0]


def test_trained_gauss1_matches_oracle(trained_gauss1, gauss_oracle):
    den, _ = trained_gauss1
    assert rms_vs_oracle(den, gauss_oracle) < 0.05


def test_training_deterministic(sched100):
    data = np.random.default_rng(0).standard_normal((40, 2))
    cfg = TrainConfig(epochs=3, seed=11, hidden=(8,))
    a, la = train_mlp(data, sched100, cfg)
    b, lb = train_mlp(data, sched100, cfg)
    assert a.net.flat().tobytes() == b.net.flat().tobytes()
    assert la.tobytes() == lb.tobytes()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_detected(sched100):
    data = np.random.default_rng(0).standard_normal((64, 2)) * 1e3
    with pytest.raises(NumericalError):
        train_mlp(data, sched100, TrainConfig(epochs=50, lr=1e4, seed=0, hidden=(8,)))


def test_empty_data_rejected(sched100):
    with pytest.raises(ValueError):
        train_mlp(np.zeros((0, 2)), sched100)


def test_evaluation_is_pure(trained_gauss1):
    den, _ = trained_gauss1
    before = den.net.flat().copy()
    x = np.random.default_rng(0).standard_normal((10, 2))
    y1 = den(x, 500)
    y2 = den(x, 500)
    assert y1.tobytes() == y2.tobytes()
    np.testing.assert_array_equal(den.net.flat(), before)


def test_checkpoint_round_trip(tmp_path, sched100):
    den = new_denoiser(3, sched100, (5, 7), n_time=6, rng=np.random.default_rng(0), data_var=2.5)
    path = tmp_path / "m.bmrk"
    save_checkpoint(path, den)
    blob = path.read_bytes()
    assert blob[:5] == b"BMRK1"
    back = load_checkpoint(path, sched100)
    assert back.net.widths == den.net.widths and back.n_time == 6 and back.data_var == 2.5
    assert back.net.flat().tobytes() == den.net.flat().tobytes()
    x = np.random.default_rng(1).standard_normal((4, 3))
    assert back(x, 40).tobytes() == den(x, 40).tobytes()


def test_checkpoint_rejects_corruption(tmp_path, sched100):
    den = new_denoiser(2, sched100, (4,), rng=np.random.default_rng(0))
    path = tmp_path / "m.bmrk"
    save_checkpoint(path, den)
    blob = path.read_bytes()
    bad = tmp_path / "bad"
    for data in (b"XXXXX" + blob[5:], blob[:-8], blob + b"\0" * 8):
        bad.write_bytes(data)
        with pytest.raises(ValueError):
            load_checkpoint(bad, sched100)
    with pytest.raises(ValueError):
        load_checkpoint(path, build_linear(50))


def test_classifier_learns_and_is_deterministic():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(-3, 1, (100, 2)), rng.normal(3, 1, (100, 2))])
    y = np.repeat([0, 1], 100)
    cfg = TrainConfig(epochs=20, batch_size=32, lr=0.05, seed=1, hidden=(16,))
    a, _ = train_classifier(x, y, 2, cfg)
    b, _ = train_classifier(x, y, 2, cfg)
    assert a.accuracy(x, y) > 0.95
    assert a.net.flat().tobytes() == b.net.flat().tobytes()
    assert a.embed(x).shape == (200, 16)


def test_mix_probability_zero_ignores_alternates():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 2))
    y = (x[:, 0] > 0).astype(int)
    cfg = TrainConfig(epochs=5, batch_size=8, lr=0.05, seed=2, hidden=(6,))
    a, _ = train_classifier(x, y, 2, cfg)
    b, _ = train_classifier(x, y, 2, cfg, alt_x=x + 100.0, mix_probability=0.0)
    assert a.net.flat().tobytes() == b.net.flat().tobytes()


def test_train_embedding_blobs_and_shuffled():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(-3, 1, (200, 2)), rng.normal(3, 1, (200, 2))])
    y = np.repeat([0, 1], 200)
    embed, acc, _ = train_embedding(x, y)
    assert acc > 0.95
    assert np.linalg.norm(embed(x[:5]) - embed(x[:5])) == 0.0
    _, acc_shuffled, _ = train_embedding(x, rng.permutation(y))
    assert abs(acc_shuffled - 0.5) <= 0.1
    with pytest.raises(ValueError):
        train_embedding(x, np.zeros(400, dtype=int))


def test_mlp_shapes():
    net = MLP([3, 5, 2], rng=np.random.default_rng(0))
    out, _ = net.forward(np.zeros((4, 3)))
    assert out.shape == (4, 2) and net.n_layers == 2
    assert isinstance(Classifier(net).predict(np.zeros((4, 3))), np.ndarray)
    assert isinstance(new_denoiser(2, build_linear(5)), MlpDenoiser)
