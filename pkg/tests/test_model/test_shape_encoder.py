"""
Tests for mask embedding, the shape distribution and latent sampling.
"""

import math

import numpy as np
import pytest

from shapemoe.core.errors import ConfigError, DimensionError
from shapemoe.model import (
    MaskEmbedding,
    ParameterStore,
    ShapeDistribution,
    embed_mask,
    encode_distribution,
    sample_latent,
)
from shapemoe.numerics import Tensor, grad_check, ops


def _zeroed(model, *prefixes: str) -> ParameterStore:
    arrays = {name: array.copy() for name, array in model.params.as_arrays().items()}
    for name in arrays:
        if name.startswith(prefixes):
            arrays[name][...] = 0.0
    return ParameterStore.from_arrays(arrays)


class TestEmbedMask:
    def test_output_shape(self, tiny_model, tiny_scenes):
        embedding = embed_mask(tiny_scenes.visible, tiny_model.params)
        assert embedding.e_m.shape == (len(tiny_scenes), tiny_model.arch.embed_dim)

    def test_single_mask_gets_batch_axis(self, tiny_model, tiny_scenes):
        embedding = embed_mask(tiny_scenes.visible[0], tiny_model.params)
        assert embedding.e_m.shape == (1, tiny_model.arch.embed_dim)

    def test_zero_mask_embeds_to_zero(self, tiny_model):
        """Test that an all-zero mask gives e_m = 0 when biases are zero."""
        embedding = embed_mask(np.zeros((16, 16), dtype=np.uint8), tiny_model.params)
        np.testing.assert_array_equal(embedding.e_m.data, 0.0)

    def test_bad_rank(self, tiny_model):
        with pytest.raises(DimensionError):
            embed_mask(np.zeros((1, 1, 16, 16)), tiny_model.params)


class TestEncodeDistribution:
    def test_zeroed_heads(self, tiny_model, tiny_scenes):
        """Test that zero output layers give mu = 0 and std = ln 2."""
        params = _zeroed(tiny_model, "shape_encoder.mu.fc2", "shape_encoder.sigma.fc2")
        dist = encode_distribution(embed_mask(tiny_scenes.visible, params), params)

        np.testing.assert_array_equal(dist.mu.data, 0.0)
        np.testing.assert_allclose(dist.std(), math.log(2.0), rtol=1e-6)

    def test_std_is_positive(self, tiny_model, tiny_scenes):
        dist = encode_distribution(embed_mask(tiny_scenes.visible, tiny_model.params), tiny_model.params)
        assert dist.mu.shape == (len(tiny_scenes), tiny_model.arch.latent_dim)
        assert (dist.std() > 0).all()

    def test_wrong_embedding_width(self, tiny_model):
        with pytest.raises(DimensionError):
            encode_distribution(MaskEmbedding(e_m=Tensor(np.zeros((2, 99)))), tiny_model.params)


class TestSampleLatent:
    def _dist(self, sigma_raw: float) -> ShapeDistribution:
        mu = Tensor([[0.5, -1.0, 2.0]])
        return ShapeDistribution(mu=mu, sigma_raw=Tensor(np.full((1, 3), sigma_raw, dtype=np.float32)))

    def test_infer_returns_mean(self):
        """Test that inference routes on mu itself with eta = 0."""
        dist = self._dist(0.0)
        latent = sample_latent(dist, "infer")

        assert latent.l_o is dist.mu
        np.testing.assert_array_equal(latent.eta, 0.0)

    def test_train_with_tiny_std(self, rng):
        """Test that a very negative sigma_raw collapses samples onto mu."""
        dist = self._dist(-20.0)
        latent = sample_latent(dist, "train", rng=rng)
        np.testing.assert_allclose(latent.l_o.data, dist.mu.data, atol=1e-6)

    def test_train_with_frozen_eta(self):
        dist = self._dist(0.0)
        eta = np.array([[1.0, 0.0, -2.0]])

        latent = sample_latent(dist, "train", eta=eta)

        expected = dist.mu.data + math.log(2.0) * eta
        np.testing.assert_allclose(latent.l_o.data, expected, rtol=1e-6)

    def test_train_draws_from_rng(self):
        dist = self._dist(0.0)
        a = sample_latent(dist, "train", rng=np.random.default_rng(3))
        b = sample_latent(dist, "train", rng=np.random.default_rng(3))
        assert a.l_o.data.tobytes() == b.l_o.data.tobytes()

    def test_train_without_noise_source(self):
        with pytest.raises(ConfigError):
            sample_latent(self._dist(0.0), "train")

    def test_unknown_mode(self, rng):
        with pytest.raises(ConfigError):
            sample_latent(self._dist(0.0), "sample", rng=rng)

    def test_eta_shape_mismatch(self):
        with pytest.raises(DimensionError):
            sample_latent(self._dist(0.0), "train", eta=np.zeros((2, 3)))

    def test_sample_mean_matches_mu(self):
        """Test that 10,000 draws average to mu within 4 std / sqrt(n) per dimension."""
        n = 10_000
        mu = np.array([0.5, -1.0, 2.0])
        sigma_raw = np.array([0.0, 1.0, -1.0])
        dist = ShapeDistribution(mu=Tensor(np.tile(mu, (n, 1))), sigma_raw=Tensor(np.tile(sigma_raw, (n, 1))))

        samples = sample_latent(dist, "train", rng=np.random.default_rng(17)).l_o.data

        std = np.log1p(np.exp(sigma_raw))
        assert np.all(np.abs(samples.mean(axis=0) - mu) <= 4.0 * std / math.sqrt(n))
        np.testing.assert_allclose(samples.std(axis=0), std, rtol=0.05)


def _subset_objective(model, prefixes: tuple[str, ...], build):
    """Objective over the parameters under `prefixes`, all others held at the model's values."""
    names = [name for name in model.params.names() if name.startswith(prefixes)]
    base = dict(model.params.items())

    def objective(*tensors: Tensor) -> Tensor:
        return build({**base, **dict(zip(names, tensors, strict=True))})

    return objective, [model.params[name] for name in names]


class TestStageGradients:
    def test_embedding_and_distribution_heads(self, tiny_model, tiny_scenes, rng):
        """Test mask-embedder and mu/sigma-head gradients against finite differences."""
        visible = tiny_scenes.visible[:3]
        d = tiny_model.arch.latent_dim
        head_mu, head_sigma = Tensor(rng.standard_normal((3, d))), Tensor(rng.standard_normal((3, d)))

        def build(params):
            dist = encode_distribution(embed_mask(visible, params), params)
            return ops.add(ops.sum(ops.mul(dist.mu, head_mu)), ops.sum(ops.mul(dist.sigma_raw, head_sigma)))

        objective, tensors = _subset_objective(tiny_model, ("mask_embedder.", "shape_encoder."), build)
        report = grad_check(objective, tensors, name="shape_encoder", max_entries=6)

        assert report.passed, report
        assert report.checked_entries > 0

    @pytest.mark.parametrize("seed", range(20))
    def test_reparameterization_gradient(self, seed):
        """Test d l_o / d mu = 1 and d l_o / d sigma_raw = softplus'(sigma_raw) * eta with eta frozen."""
        rng = np.random.default_rng(seed)
        mu, sigma_raw = Tensor(rng.standard_normal((3, 4))), Tensor(2.0 * rng.standard_normal((3, 4)))
        eta, head = rng.standard_normal((3, 4)), Tensor(rng.standard_normal((3, 4)))

        def objective(m: Tensor, s: Tensor) -> Tensor:
            latent = sample_latent(ShapeDistribution(mu=m, sigma_raw=s), "train", eta=eta)
            return ops.sum(ops.mul(latent.l_o, head))

        report = grad_check(objective, [mu, sigma_raw], name="reparameterization")
        assert report.passed, report

        m = Tensor(mu.data, requires_grad=True)
        s = Tensor(sigma_raw.data, requires_grad=True)
        objective(m, s).backward()
        slope = 1.0 / (1.0 + np.exp(-sigma_raw.data))
        np.testing.assert_allclose(m.grad, head.data, rtol=1e-12)
        np.testing.assert_allclose(s.grad, slope * eta * head.data, rtol=1e-10)
