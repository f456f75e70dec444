"""
Tests for the training objective.
"""

import math

import numpy as np
import pytest

from shapemoe.core.errors import DimensionError
from shapemoe.model import MaskPrediction, gate_scores
from shapemoe.numerics import Tensor
from shapemoe.training import total_loss


def _decision(scores):
    return gate_scores(Tensor(scores), 1)


class TestTotalLoss:
    def test_zero_logits(self):
        """Test that zero logits cost ln 2 per pixel whatever the target."""
        target = np.eye(8, dtype=np.uint8)
        loss = total_loss(MaskPrediction(Tensor(np.zeros((1, 8, 8)))), target, _decision([[1.0, 0.0]]), 0.0)
        assert loss.ce.item() == pytest.approx(math.log(2.0), rel=1e-6)

    def test_confident_correct_logits(self):
        target = np.eye(8, dtype=np.uint8)[None]
        logits = Tensor(np.where(target == 1, 20.0, -20.0))
        loss = total_loss(MaskPrediction(logits), target, _decision([[1.0, 0.0]]), 0.0)
        assert loss.ce.item() < 1e-8

    def test_balanced_gates_add_nothing(self):
        """Test that evenly spread gates leave total equal to cross-entropy."""
        decision = _decision(np.eye(2) * 2.0)
        prediction = MaskPrediction(Tensor(np.zeros((2, 4, 4))))

        loss = total_loss(prediction, np.ones((2, 4, 4)), decision, 1.0)

        assert loss.balance.item() == pytest.approx(0.0, abs=1e-12)
        assert loss.total.item() == pytest.approx(loss.ce.item())

    def test_weighted_balance(self):
        """Test that a collapsed batch adds weight * CV^2."""
        decision = _decision(np.tile([2.0, 0.0], (2, 1)))
        prediction = MaskPrediction(Tensor(np.zeros((2, 4, 4))))

        loss = total_loss(prediction, np.ones((2, 4, 4)), decision, 0.5)

        assert loss.balance.item() == pytest.approx(1.0, rel=1e-6)
        assert loss.total.item() == pytest.approx(loss.ce.item() + 0.5, rel=1e-6)

    def test_zero_weight_returns_ce_tensor(self):
        decision = _decision(np.tile([2.0, 0.0], (2, 1)))
        loss = total_loss(MaskPrediction(Tensor(np.zeros((2, 4, 4)))), np.ones((2, 4, 4)), decision, 0.0)
        assert loss.total is loss.ce

    def test_target_shape_mismatch(self):
        with pytest.raises(DimensionError):
            total_loss(MaskPrediction(Tensor(np.zeros((2, 4, 4)))), np.ones((2, 5, 5)), _decision([[1.0, 0.0]]))
