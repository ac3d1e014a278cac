"""Adapter kinds: reconstruction, forward, analytic gradients, serialization."""

import numpy as np
import pytest

from sdctft.adapters import (
    AdapterConfig,
    LoraAdapter,
    adapter_from_state,
    init_adapter,
    init_fourierft,
    init_lora,
    init_rdctft,
    init_sdctft,
    load_adapter,
    save_adapter,
)
from sdctft.spectral import SpectralMatrix, dct2, idct2

RNG = np.random.default_rng


def quadratic_probe_loss(adapter, W, x, target):
    """L = ||(W + delta) applied to x - target||^2 / 2 and its upstream."""
    out = adapter.forward(W, x)
    residual = out - target
    loss = 0.5 * float(np.sum(residual ** 2))
    upstream = np.atleast_2d(x).T @ np.atleast_2d(residual)
    return loss, upstream


def central_difference(loss_fn, arr, index, step=1e-5):
    orig = arr[index]
    arr[index] = orig + step
    up = loss_fn()
    arr[index] = orig - step
    down = loss_fn()
    arr[index] = orig
    return (up - down) / (2 * step)


class TestAdapterConfig:
    def test_lora_fields(self):
        cfg = AdapterConfig(kind="lora", r=4, alpha=2.0, seed=1)
        assert cfg.budget == 4
        with pytest.raises(ValueError):
            AdapterConfig(kind="lora", r=4, n=10)
        with pytest.raises(ValueError):
            AdapterConfig(kind="lora", r=4, delta=0.5)
        with pytest.raises(ValueError):
            AdapterConfig(kind="lora")

    def test_spectral_fields(self):
        cfg = AdapterConfig(kind="sdctft", n=16)
        assert cfg.delta == 0.7  # default energy ratio
        assert AdapterConfig(kind="sdctft", n=16, delta=0.25).delta == 0.25
        with pytest.raises(ValueError):
            AdapterConfig(kind="rdctft", n=16, delta=0.5)
        with pytest.raises(ValueError):
            AdapterConfig(kind="fourierft", n=16, r=2)
        with pytest.raises(ValueError):
            AdapterConfig(kind="sdctft", n=16, delta=1.5)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            AdapterConfig(kind="prefix", n=4)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            AdapterConfig(kind="sdctft", n=4, alpha=0.0)


class TestInitSdctft:
    def test_deterministic(self):
        W = RNG(0).normal(size=(12, 12))
        cfg = AdapterConfig(kind="sdctft", n=10, seed=42)
        a, b = init_sdctft(W, cfg), init_sdctft(W, cfg)
        assert a.plan == b.plan
        assert np.array_equal(a.coeffs, b.coeffs)

    def test_top1_semantics_with_delta_one(self):
        # DC-dominated spectrum, delta = 1: whichever band gets the single
        # pick, it must be that band's highest-energy index
        W = np.full((8, 8), 5.0) + 0.01 * RNG(1).normal(size=(8, 8))
        cfg = AdapterConfig(kind="sdctft", n=1, delta=1.0, seed=0)
        adapter = init_sdctft(W, cfg)
        (band,) = [b for b in adapter.plan.bands if b.n_band == 1]
        from sdctft.selection import partition, rank_by_energy

        members = partition(8, 8).band(band.name)
        assert list(band.energy) == rank_by_energy(dct2(W), members, 1)

    def test_benchmark_budget_param_count(self):
        W = RNG(2).normal(size=(64, 64))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=90, seed=0))
        assert adapter.param_count() == 90

    def test_coeffs_do_not_copy_spectrum(self):
        W = RNG(3).normal(size=(8, 8))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=5, seed=0))
        F = dct2(W).data
        spectrum_values = [F[u, v] for u, v in adapter.plan.indices]
        assert not np.allclose(adapter.coeffs, spectrum_values)

    def test_budget_over_grid_rejected(self):
        with pytest.raises(ValueError):
            init_sdctft(np.ones((4, 4)), AdapterConfig(kind="sdctft", n=17, seed=0))


class TestDeltaWeight:
    def test_zero_coeffs_zero_delta(self):
        W = RNG(0).normal(size=(8, 8))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=6, seed=0))
        adapter.coeffs[:] = 0.0
        assert np.array_equal(adapter.delta_weight(), np.zeros((8, 8)))
        x = RNG(1).normal(size=8)
        assert np.array_equal(adapter.forward(W, x), x @ W)

    def test_dc_coefficient_2x2(self):
        W = np.zeros((2, 2))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=4, delta=0.0, seed=0))
        adapter.coeffs[:] = 0.0
        dc_pos = adapter.plan.indices.index((0, 0))
        adapter.coeffs[dc_pos] = 3.0
        assert np.abs(adapter.delta_weight() - 0.5 * 3.0).max() < 1e-14

    def test_matches_dense_route(self):
        W = RNG(4).normal(size=(16, 16))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=20, alpha=2.0, seed=7))
        dense = np.zeros((16, 16))
        for (u, v), c in zip(adapter.plan.indices, adapter.coeffs):
            dense[u, v] = c
        expected = 2.0 * idct2(SpectralMatrix(dense))
        assert np.abs(adapter.delta_weight() - expected).max() < 1e-12

    def test_merge_idempotent_bit_identical(self):
        W = RNG(5).normal(size=(10, 10))
        for kind, kw in [("sdctft", {"n": 8}), ("fourierft", {"n": 8}), ("lora", {"r": 2})]:
            adapter = init_adapter(W, AdapterConfig(kind=kind, seed=3, **kw))
            assert np.array_equal(adapter.delta_weight(), adapter.delta_weight())


class TestForward:
    def test_full_spectrum_identity_reconstruction(self):
        # n = M*N and coeffs set to the spectrum of I reconstructs the
        # identity map exactly
        M = 8
        W = np.zeros((M, M))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=M * M, seed=0))
        F = dct2(np.eye(M)).data
        adapter.coeffs[:] = [F[u, v] for u, v in adapter.plan.indices]
        x = RNG(6).normal(size=M)
        assert np.abs(adapter.forward(W, x) - x).max() < 1e-10

    def test_matches_dense_computation(self):
        W = RNG(7).normal(size=(12, 9))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=11, alpha=1.5, seed=2))
        X = RNG(8).normal(size=(4, 12))
        expected = X @ (W + adapter.delta_weight())
        got = adapter.forward(W, X)
        assert np.abs(got - expected).max() < 1e-12 * max(1.0, np.abs(expected).max())

    def test_dimension_mismatch(self):
        W = RNG(9).normal(size=(6, 6))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=4, seed=0))
        with pytest.raises(ValueError):
            adapter.forward(W, np.ones(5))
        with pytest.raises(ValueError):
            adapter.forward(np.ones((5, 6)), np.ones(5))


class TestGradCoeffs:
    def test_zero_upstream(self):
        W = RNG(0).normal(size=(8, 8))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=6, seed=1))
        assert np.array_equal(adapter.grad_coeffs(np.zeros((8, 8))), np.zeros(6))

    def test_single_index_matches_finite_difference(self):
        W = RNG(1).normal(size=(8, 8))
        x = RNG(2).normal(size=8)
        target = RNG(3).normal(size=8)
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=1, alpha=1.3, seed=5))
        _, upstream = quadratic_probe_loss(adapter, W, x, target)
        analytic = adapter.grad_coeffs(upstream)[0]
        fd = central_difference(
            lambda: quadratic_probe_loss(adapter, W, x, target)[0], adapter.coeffs, 0
        )
        assert abs(analytic - fd) <= 1e-6 * max(abs(fd), 1e-8)

    def test_linearity_of_adjoint(self):
        W = RNG(4).normal(size=(10, 10))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=7, seed=2))
        U1, U2 = RNG(5).normal(size=(10, 10)), RNG(6).normal(size=(10, 10))
        c1, c2 = 0.3, -1.8
        combined = adapter.grad_coeffs(c1 * U1 + c2 * U2)
        split = c1 * adapter.grad_coeffs(U1) + c2 * adapter.grad_coeffs(U2)
        assert np.abs(combined - split).max() < 1e-10

    def test_shape_mismatch(self):
        W = RNG(7).normal(size=(6, 6))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=4, seed=0))
        with pytest.raises(ValueError):
            adapter.grad_coeffs(np.zeros((5, 6)))

    @pytest.mark.parametrize("kind,kw", [
        ("sdctft", {"n": 13}),
        ("rdctft", {"n": 13}),
        ("fourierft", {"n": 13}),
        ("lora", {"r": 3}),
    ])
    def test_gradient_check_quadratic_probe(self, kind, kw):
        W = RNG(10).normal(size=(16, 16))
        adapter = init_adapter(W, AdapterConfig(kind=kind, alpha=1.7, seed=11, **kw))
        if kind == "lora":
            adapter.B[:] = RNG(12).normal(size=adapter.B.shape)  # make dB informative
        x = RNG(13).normal(size=16)
        target = RNG(14).normal(size=16)
        _, upstream = quadratic_probe_loss(adapter, W, x, target)
        loss_fn = lambda: quadratic_probe_loss(adapter, W, x, target)[0]
        if kind == "lora":
            gA, gB = adapter.grad_coeffs(upstream)
            for arr, grad in ((adapter.A, gA), (adapter.B, gB)):
                for index in [(0, 0), (arr.shape[0] - 1, arr.shape[1] - 1)]:
                    fd = central_difference(loss_fn, arr, index)
                    assert abs(grad[index] - fd) <= 1e-5 * max(abs(fd), 1e-8)
        else:
            grad = adapter.grad_coeffs(upstream)
            for k in range(len(grad)):
                fd = central_difference(loss_fn, adapter.coeffs, k)
                assert abs(grad[k] - fd) <= 1e-5 * max(abs(fd), 1e-8)


class TestBaselineInits:
    def test_lora_zero_at_init(self):
        W = RNG(0).normal(size=(16, 8))
        adapter = init_lora(W, AdapterConfig(kind="lora", r=2, seed=0))
        assert np.array_equal(adapter.delta_weight(), np.zeros((16, 8)))
        assert np.array_equal(adapter.B, np.zeros((2, 8)))

    def test_fourierft_param_count_benchmark(self):
        W = RNG(1).normal(size=(64, 64))
        adapter = init_fourierft(W, AdapterConfig(kind="fourierft", n=128, seed=0))
        assert adapter.param_count() == 128

    def test_lora_param_count_benchmark(self):
        W = RNG(2).normal(size=(64, 64))
        adapter = init_lora(W, AdapterConfig(kind="lora", r=1, seed=0))
        assert adapter.param_count() == 1 * (64 + 64) == 128

    def test_rdctft_ignores_bands(self):
        W = RNG(3).normal(size=(16, 16))
        adapter = init_rdctft(W, AdapterConfig(kind="rdctft", n=10, seed=9))
        assert [b.name for b in adapter.plan.bands] == ["all"]
        assert adapter.param_count() == 10

    def test_sparsity_contract(self):
        # the trainable state holds exactly n values; non-selected
        # positions have no representation to mutate
        W = RNG(4).normal(size=(12, 12))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=9, seed=1))
        params = adapter.trainable_parameters()
        assert sum(p.size for p in params.values()) == 9


class TestFullBudgetCompleteness:
    @pytest.mark.parametrize("kind", ["sdctft", "rdctft"])
    def test_reconstructs_arbitrary_target(self, kind):
        # complete basis: with n = M*N a least-squares fit of the
        # coefficients reproduces any target update
        M = 8
        W = RNG(5).normal(size=(M, M))
        adapter = init_adapter(W, AdapterConfig(kind=kind, n=M * M, seed=3))
        target = RNG(6).normal(size=(M, M))
        basis = np.column_stack([
            adapter.alpha * idct2(SpectralMatrix(_one_hot(M, u, v))).ravel()
            for u, v in adapter.plan.indices
        ])
        coeffs, *_ = np.linalg.lstsq(basis, target.ravel(), rcond=None)
        adapter.coeffs[:] = coeffs
        assert np.abs(adapter.delta_weight() - target).max() < 1e-10


def _one_hot(n, u, v):
    out = np.zeros((n, n))
    out[u, v] = 1.0
    return out


class TestSerialization:
    @pytest.mark.parametrize("kind,kw", [
        ("sdctft", {"n": 14}),
        ("rdctft", {"n": 14}),
        ("fourierft", {"n": 14}),
        ("lora", {"r": 3}),
    ])
    def test_round_trip_forward_bit_identical(self, tmp_path, kind, kw):
        W = RNG(20).normal(size=(16, 16))
        adapter = init_adapter(W, AdapterConfig(kind=kind, alpha=1.25, seed=8, **kw))
        if isinstance(adapter, LoraAdapter):
            adapter.B[:] = RNG(21).normal(size=adapter.B.shape)
        else:
            adapter.coeffs[:] = RNG(21).normal(size=adapter.coeffs.shape)
        path = tmp_path / "adapter.json"
        save_adapter(adapter, path)
        loaded = load_adapter(path)
        x = RNG(22).normal(size=(5, 16))
        assert np.array_equal(loaded.forward(W, x), adapter.forward(W, x))
        assert loaded.param_count() == adapter.param_count()

    def test_state_dict_round_trip(self):
        W = RNG(23).normal(size=(8, 8))
        adapter = init_sdctft(W, AdapterConfig(kind="sdctft", n=5, seed=2))
        clone = adapter_from_state(adapter.to_state())
        assert clone.plan == adapter.plan
        assert np.array_equal(clone.coeffs, adapter.coeffs)
        assert clone.config == adapter.config
