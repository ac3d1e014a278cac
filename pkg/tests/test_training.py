"""Trainer: forward composition, manual backprop, optimizers, determinism."""

import math

import numpy as np
import pytest

from sdctft.adapters import AdapterConfig, init_adapter, init_sdctft
from sdctft.training import (
    EpochRecord,
    ToyNetwork,
    TrainConfig,
    TrainingDivergedError,
    build_network,
    forward_network,
    loss_and_grads,
    train,
    trainable_param_count,
)

RNG = np.random.default_rng


def small_net(seed=0, hidden=16, adapter_kind=None, **adapter_kw):
    net = build_network(seed=seed, hidden_dim=hidden)
    if adapter_kind is not None:
        net.adapter = init_adapter(net.W_hidden,
                                   AdapterConfig(kind=adapter_kind, seed=seed, **adapter_kw))
    return net


def batch(seed=0, size=16):
    rng = RNG(seed)
    return rng.normal(size=(size, 2)), rng.integers(0, 8, size=size)


def dense_forward_reference(net, X):
    """Independent re-composition of the forward map."""
    delta = net.adapter.delta_weight() if net.adapter is not None else 0.0
    h1 = np.maximum(X @ net.W_in + net.b_in, 0.0)
    h2 = np.maximum(h1 @ (net.W_hidden + delta) + net.b_hidden, 0.0)
    return h2 @ net.W_out + net.b_out


class TestForwardNetwork:
    def test_zero_everything_gives_zero_logits(self):
        H, C = 8, 8
        net = ToyNetwork(
            W_in=np.zeros((2, H)), b_in=np.zeros(H),
            W_hidden=np.zeros((H, H)), b_hidden=np.zeros(H),
            W_out=np.zeros((H, C)), b_out=np.zeros(C),
        )
        assert np.array_equal(forward_network(net, np.zeros((3, 2))), np.zeros((3, C)))

    def test_zeroed_adapter_equals_no_adapter(self):
        X, _ = batch()
        net = small_net(adapter_kind="sdctft", n=10)
        net.adapter.coeffs[:] = 0.0
        with_adapter = forward_network(net, X)
        net.adapter = None
        assert np.array_equal(with_adapter, forward_network(net, X))

    def test_matches_dense_reference(self):
        X, _ = batch(3)
        net = small_net(seed=5, adapter_kind="sdctft", n=12)
        net.adapter.coeffs[:] = RNG(4).normal(size=12)
        assert np.abs(forward_network(net, X) - dense_forward_reference(net, X)).max() < 1e-12

    def test_shape_mismatch(self):
        net = small_net()
        with pytest.raises(ValueError):
            forward_network(net, np.zeros((4, 3)))


class TestLossAndGrads:
    def test_uniform_logits_loss_is_log_classes(self):
        H = 16
        net = ToyNetwork(
            W_in=np.zeros((2, H)), b_in=np.zeros(H),
            W_hidden=np.zeros((H, H)), b_hidden=np.zeros(H),
            W_out=np.zeros((H, 8)), b_out=np.zeros(8),
        )
        X, y = batch()
        loss, _ = loss_and_grads(net, X, y)
        assert loss == pytest.approx(math.log(8.0), abs=1e-12)

    @pytest.mark.parametrize("kind,kw", [
        ("sdctft", {"n": 11}),
        ("rdctft", {"n": 11}),
        ("fourierft", {"n": 11}),
        ("lora", {"r": 2}),
    ])
    def test_all_gradients_match_finite_differences(self, kind, kw):
        net = small_net(seed=1, adapter_kind=kind, **kw)
        if kind == "lora":
            net.adapter.B[:] = 0.1 * RNG(2).normal(size=net.adapter.B.shape)
        X, y = batch(7)
        step = 1e-5

        def loss_at():
            return loss_and_grads(net, X, y)[0]

        _, grads = loss_and_grads(net, X, y)
        checks = [(net.W_out, grads.W_out), (net.b_out, grads.b_out),
                  (net.b_hidden, grads.b_hidden), (net.b_in, grads.b_in)]
        if kind == "lora":
            checks += [(net.adapter.A, grads.adapter[0]), (net.adapter.B, grads.adapter[1])]
        else:
            checks += [(net.adapter.coeffs, grads.adapter)]
        for arr, grad in checks:
            flat = arr.reshape(-1)
            gflat = np.asarray(grad).reshape(-1)
            for k in range(0, flat.size, max(1, flat.size // 6)):
                orig = flat[k]
                flat[k] = orig + step
                up = loss_at()
                flat[k] = orig - step
                down = loss_at()
                flat[k] = orig
                fd = (up - down) / (2 * step)
                assert abs(gflat[k] - fd) <= 1e-4 * max(abs(fd), 1e-7)

    def test_batch_duplication_invariance(self):
        net = small_net(seed=2, adapter_kind="sdctft", n=9)
        X, y = batch(5, size=8)
        loss1, grads1 = loss_and_grads(net, X, y)
        loss2, grads2 = loss_and_grads(net, np.vstack([X, X]), np.concatenate([y, y]))
        assert loss1 == pytest.approx(loss2, rel=1e-12)
        assert np.abs(grads1.W_out - grads2.W_out).max() < 1e-12
        assert np.abs(grads1.adapter - grads2.adapter).max() < 1e-12

    def test_rejects_bad_labels(self):
        net = small_net()
        X, y = batch()
        with pytest.raises(ValueError):
            loss_and_grads(net, X, np.full_like(y, 9))


class TestTrain:
    def test_epochs_validation_and_single_record(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0, learning_rate=0.1)
        net = small_net(adapter_kind="sdctft", n=8)
        X, y = batch()
        records = train(net, (X, y), TrainConfig(epochs=1, learning_rate=0.1))
        assert len(records) == 1
        assert isinstance(records[0], EpochRecord)
        assert records[0].epoch == 1

    def test_zero_learning_rate_is_constant(self):
        net = small_net(adapter_kind="lora", r=2)
        X, y = batch()
        records = train(net, (X, y), TrainConfig(epochs=5, learning_rate=0.0))
        assert len({r.loss for r in records}) == 1
        assert len({r.accuracy for r in records}) == 1

    @pytest.mark.filterwarnings("ignore:overflow", "ignore:invalid value")
    def test_divergence_aborts_with_epoch(self):
        net = small_net(adapter_kind="sdctft", n=8)
        X, y = batch()
        with pytest.raises(TrainingDivergedError) as err:
            train(net, (X, y), TrainConfig(epochs=50, learning_rate=1e18, optimizer="sgd"))
        assert err.value.epoch >= 1

    def test_frozen_weights_untouched(self):
        net = small_net(seed=3, adapter_kind="sdctft", n=8)
        W_in = net.W_in.copy()
        W_hidden = net.W_hidden.copy()
        b_in = net.b_in.copy()
        b_hidden = net.b_hidden.copy()
        X, y = batch()
        train(net, (X, y), TrainConfig(epochs=20, learning_rate=0.05))
        assert np.array_equal(net.W_in, W_in)
        assert np.array_equal(net.W_hidden, W_hidden)
        assert np.array_equal(net.b_in, b_in)
        assert np.array_equal(net.b_hidden, b_hidden)

    @pytest.mark.parametrize("optimizer", ["sgd", "adam"])
    def test_deterministic(self, optimizer):
        X, y = batch(11)
        runs = []
        for _ in range(2):
            net = small_net(seed=4, adapter_kind="fourierft", n=10)
            runs.append(train(net, (X, y), TrainConfig(epochs=15, learning_rate=0.01,
                                                       optimizer=optimizer)))
        assert [(r.loss, r.accuracy) for r in runs[0]] == [(r.loss, r.accuracy) for r in runs[1]]

    def test_training_reduces_loss(self):
        net = small_net(seed=6, adapter_kind="sdctft", n=16)
        X, y = batch(9, size=64)
        records = train(net, (X, y), TrainConfig(epochs=100, learning_rate=0.01))
        assert records[-1].loss < records[0].loss

    def test_parameter_budget_accounting(self):
        X, y = batch()
        counts = {}
        for kind, kw, expected in [("sdctft", {"n": 12}, 12), ("lora", {"r": 2}, 2 * 32)]:
            net = small_net(seed=7, adapter_kind=kind, **kw)
            cfg = TrainConfig(epochs=1, learning_rate=0.01)
            assert trainable_param_count(net, cfg) == expected + net.head_param_count
            counts[kind] = net.head_param_count
        assert counts["sdctft"] == counts["lora"]  # same head across methods

    def test_frozen_head_budget(self):
        net = small_net(seed=8, adapter_kind="sdctft", n=12)
        cfg = TrainConfig(epochs=1, learning_rate=0.01, train_head=False)
        assert trainable_param_count(net, cfg) == 12

    def test_accepts_dataset_object(self):
        from sdctft.bench import generate_dataset

        data = generate_dataset(per_class=5, noise_sigma=0.3, seed=0)
        net = small_net(seed=9, adapter_kind="sdctft", n=8)
        records = train(net, data, TrainConfig(epochs=2, learning_rate=0.01))
        assert len(records) == 2
