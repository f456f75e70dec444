"""
Tests for the feature trunk, expert hypernetworks and gate blending.
"""

import math

import numpy as np
import pytest

from shapemoe.core.errors import ConfigError, DimensionError
from shapemoe.model import (
    ArchitectureConfig,
    ExpertUsageMeter,
    MaskEmbedding,
    ParameterStore,
    ShapeMoEModel,
    embed_mask,
    expert_forward,
    gate_scores,
    predict_amodal,
    trunk_forward,
)
from shapemoe.numerics import Tensor, grad_check, ops


class TestTrunk:
    def test_quarter_resolution_at_default_size(self):
        """Test that a 64x64 input gives 16x16 refined features."""
        model = ShapeMoEModel.initialize(ArchitectureConfig(), seed=0)
        images = np.random.default_rng(0).random((2, 1, 64, 64)).astype(np.float32)
        visible = np.ones((2, 64, 64), dtype=np.uint8)

        features = trunk_forward(images, visible, model.params)

        assert features.shape == (2, 64, 16, 16)

    def test_zero_input_gives_zero_features(self, tiny_model):
        """Test that zero inputs with zero biases give all-zero features."""
        features = trunk_forward(np.zeros((1, 16, 16)), np.zeros((16, 16)), tiny_model.params)

        assert features.shape == (1, 4, 4, 4)
        np.testing.assert_array_equal(features.data, 0.0)

    def test_features_are_non_negative(self, tiny_model, tiny_scenes):
        features = trunk_forward(tiny_scenes.images, tiny_scenes.visible, tiny_model.params)
        assert (features.data >= 0).all()

    def test_mismatched_batch(self, tiny_model, tiny_scenes):
        with pytest.raises(DimensionError):
            trunk_forward(tiny_scenes.images[:2], tiny_scenes.visible[:3], tiny_model.params)

    def test_size_not_divisible_by_four(self, tiny_model):
        with pytest.raises(DimensionError):
            trunk_forward(np.zeros((1, 1, 18, 18)), np.zeros((1, 18, 18)), tiny_model.params)


class TestExpertForward:
    def _setup(self, model, scenes):
        embedding = embed_mask(scenes.visible, model.params)
        features = trunk_forward(scenes.images, scenes.visible, model.params)
        return embedding, features

    def test_full_resolution_logits(self, tiny_model, tiny_scenes):
        embedding, features = self._setup(tiny_model, tiny_scenes)
        prediction = expert_forward(2, embedding, features, tiny_model.params)

        assert prediction.logits.shape == (len(tiny_scenes), 16, 16)
        assert prediction.binary.dtype == np.uint8

    def test_zero_expert_gives_zero_logits(self, tiny_model, tiny_scenes):
        """Test that an expert with zero output weights and bias predicts logit 0 everywhere."""
        arrays = {n: a.copy() for n, a in tiny_model.params.as_arrays().items()}
        for name in ("experts.1.fc2.weight", "experts.1.fc2.bias", "experts.1.bias"):
            arrays[name][...] = 0.0
        params = ParameterStore.from_arrays(arrays)
        embedding, features = self._setup(ShapeMoEModel(tiny_model.arch, params), tiny_scenes)

        prediction = expert_forward(1, embedding, features, params)

        np.testing.assert_array_equal(prediction.logits.data, 0.0)
        np.testing.assert_array_equal(prediction.probability, 0.5)
        np.testing.assert_array_equal(prediction.binary, 1)

    def test_constant_features_give_constant_logits(self, tiny_model):
        """Test that spatially constant features give a spatially constant mask."""
        per_channel = np.array([0.3, 1.0, 0.0, 2.0], dtype=np.float32)
        features = Tensor(np.broadcast_to(per_channel[None, :, None, None], (1, 4, 4, 4)).copy())
        embedding = MaskEmbedding(e_m=Tensor(np.ones((1, 6), dtype=np.float32)))

        logits = expert_forward(0, embedding, features, tiny_model.params).logits.data

        np.testing.assert_allclose(logits, logits[0, 0, 0], rtol=1e-5, atol=1e-6)

    def test_single_sample_features(self, tiny_model, tiny_scenes):
        embedding, features = self._setup(tiny_model, tiny_scenes.subset([0]))
        prediction = expert_forward(0, embedding, Tensor(features.data[0]), tiny_model.params)
        assert prediction.logits.shape == (1, 16, 16)

    @pytest.mark.parametrize("j", [-1, 4])
    def test_expert_out_of_range(self, tiny_model, tiny_scenes, j):
        embedding, features = self._setup(tiny_model, tiny_scenes)
        with pytest.raises(ConfigError):
            expert_forward(j, embedding, features, tiny_model.params)

    def test_sample_count_mismatch(self, tiny_model, tiny_scenes):
        embedding, features = self._setup(tiny_model, tiny_scenes)
        with pytest.raises(DimensionError):
            expert_forward(0, embedding, Tensor(features.data[:2]), tiny_model.params)


class TestPredictAmodal:
    SCORES = [[0.5, 2.0, -1.0, 1.0]]

    def test_top1_passes_logits_through(self, rng):
        """Test that with k=1 the output is bitwise the selected expert's logits."""
        scores = np.array([[0.0, 2.0, 1.0], [3.0, 0.0, 1.0], [0.0, 0.0, 4.0], [0.0, 5.0, 1.0]])
        decision = gate_scores(Tensor(scores, dtype=np.float32), 1)
        logits = {
            j: Tensor(rng.standard_normal((decision.rows_for(j).size, 8, 8)).astype(np.float32))
            for j in range(3)
        }

        out = predict_amodal(decision, logits).logits.data

        for j, expert_logits in logits.items():
            rows = decision.rows_for(j)
            assert out[rows].tobytes() == expert_logits.data.tobytes()

    def test_top2_equal_experts(self, rng):
        """Test that blending identical expert outputs returns that output."""
        decision = gate_scores(Tensor(self.SCORES), 2)
        same = Tensor(rng.standard_normal((1, 8, 8)).astype(np.float32))

        out = predict_amodal(decision, {1: same, 3: same}).logits.data

        np.testing.assert_allclose(out, same.data, rtol=1e-6, atol=1e-6)

    def test_top2_blend(self):
        """Test that gates 0.731/0.269 blend logits 1 and 0 into 0.731."""
        decision = gate_scores(Tensor(self.SCORES), 2)
        ones, zeros = Tensor(np.ones((1, 4, 4))), Tensor(np.zeros((1, 4, 4)))

        out = predict_amodal(decision, {1: ones, 3: zeros}).logits.data

        np.testing.assert_allclose(out, 1.0 / (1.0 + math.e ** -1.0), atol=1e-5)

    def test_missing_selected_expert(self):
        decision = gate_scores(Tensor(self.SCORES), 2)
        with pytest.raises(ConfigError):
            predict_amodal(decision, {1: Tensor(np.zeros((1, 4, 4)))})

    def test_wrong_row_count(self):
        decision = gate_scores(Tensor(self.SCORES), 1)
        with pytest.raises(DimensionError):
            predict_amodal(decision, {1: Tensor(np.zeros((2, 4, 4)))})


class TestExpertUsageMeter:
    def test_counts(self):
        meter = ExpertUsageMeter(3)
        meter.record(0, 2)
        meter.record(2, 5)

        assert meter.counts.tolist() == [2, 0, 5]
        assert meter.total == 7

        meter.reset()
        assert meter.total == 0


class TestStageGradients:
    def _objective(self, model, prefixes, build):
        names = [name for name in model.params.names() if name.startswith(prefixes)]
        base = dict(model.params.items())

        def objective(*tensors: Tensor) -> Tensor:
            return build({**base, **dict(zip(names, tensors, strict=True))})

        return objective, [model.params[name] for name in names]

    def test_trunk_gradient(self, tiny_model, tiny_scenes, rng):
        """Test trunk conv gradients through a linear head on F."""
        scenes = tiny_scenes.subset([0, 1])
        size = tiny_model.arch.feature_size
        head = Tensor(rng.standard_normal((2, tiny_model.arch.feature_channels, size, size)))

        def build(params):
            return ops.sum(ops.mul(trunk_forward(scenes.images, scenes.visible, params), head))

        objective, tensors = self._objective(tiny_model, ("trunk.",), build)
        report = grad_check(objective, tensors, name="trunk", max_entries=6)

        assert report.passed, report
        assert report.checked_entries > 0

    @pytest.mark.parametrize("j", [0, 3])
    def test_expert_gradient(self, tiny_model, tiny_scenes, rng, j):
        """Test an expert hypernetwork's gradients together with the features it reads."""
        scenes = tiny_scenes.subset([0, 1])
        head = Tensor(rng.standard_normal((2, 16, 16)))

        def build(params):
            embedding = embed_mask(scenes.visible, params)
            features = trunk_forward(scenes.images, scenes.visible, params)
            return ops.sum(ops.mul(expert_forward(j, embedding, features, params).logits, head))

        objective, tensors = self._objective(tiny_model, (f"experts.{j}.", "trunk.refine2."), build)
        report = grad_check(objective, tensors, name=f"expert-{j}", max_entries=6)

        assert report.passed, report
        assert report.checked_entries > 0
