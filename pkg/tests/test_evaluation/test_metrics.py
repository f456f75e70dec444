"""
Tests for IoU and routing statistics.
"""

import json
import math

import numpy as np
import pytest

from shapemoe.core.errors import DimensionError
from shapemoe.evaluation import (
    family_histogram,
    iou,
    mean_iou_full,
    mean_iou_occluded,
    normalized_entropy,
    purity,
    utilization,
)


def _brute_force_iou(a: np.ndarray, b: np.ndarray) -> float | None:
    inter = union = 0
    for x, y in zip(a.reshape(-1).tolist(), b.reshape(-1).tolist(), strict=True):
        inter += int(x and y)
        union += int(x or y)
    return None if union == 0 else inter / union


class TestIoU:
    def test_identical(self):
        mask = np.eye(4, dtype=np.uint8)
        assert iou(mask, mask) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4), dtype=np.uint8)
        b = np.zeros((4, 4), dtype=np.uint8)
        a[0, 0], b[3, 3] = 1, 1
        assert iou(a, b) == 0.0

    def test_partial_overlap(self):
        """Test that two 2x2 squares sharing one column give 2/6."""
        a = np.zeros((4, 4), dtype=np.uint8)
        b = np.zeros((4, 4), dtype=np.uint8)
        a[0:2, 0:2] = 1
        b[0:2, 1:3] = 1
        assert iou(a, b) == pytest.approx(2 / 6)

    def test_both_empty(self):
        """Test that two empty masks have undefined IoU."""
        assert iou(np.zeros((3, 3)), np.zeros((3, 3))) is None

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            iou(np.zeros((3, 3)), np.zeros((4, 4)))

    def test_matches_brute_force(self, rng):
        """Test against a pixel-loop reference on random 8x8 masks, both argument orders."""
        for _ in range(50):
            a = (rng.random((8, 8)) < rng.random()).astype(np.uint8)
            b = (rng.random((8, 8)) < rng.random()).astype(np.uint8)
            expected = _brute_force_iou(a, b)
            assert iou(a, b) == expected
            assert iou(b, a) == expected


class TestMeanIoU:
    def test_full_skips_undefined(self):
        preds = np.stack([np.ones((2, 2)), np.zeros((2, 2))]).astype(np.uint8)
        truth = np.stack([np.ones((2, 2)), np.zeros((2, 2))]).astype(np.uint8)
        assert mean_iou_full(preds, truth) == 1.0

    def test_full_all_undefined(self):
        assert mean_iou_full(np.zeros((2, 3, 3)), np.zeros((2, 3, 3))) is None

    def test_occluded_region_only(self):
        """Test that only pixels hidden by occluders count toward occluded IoU."""
        amodal = np.zeros((1, 4, 4), dtype=np.uint8)
        amodal[0, :, :2] = 1
        visible = amodal.copy()
        visible[0, :, 1] = 0
        pred = visible.copy()
        pred[0, :2, 1] = 1

        score, count = mean_iou_occluded(pred, visible, amodal)

        assert count == 1
        assert score == pytest.approx(0.5)

    def test_occluded_skips_unoccluded_samples(self):
        amodal = np.ones((2, 3, 3), dtype=np.uint8)
        score, count = mean_iou_occluded(amodal, amodal, amodal)
        assert score is None and count == 0


class TestRoutingStatistics:
    def test_utilization(self):
        gates = np.array([[1.0, 0.0], [1.0, 0.0], [0.25, 0.75], [0.0, 1.0]])
        np.testing.assert_allclose(utilization(gates), [0.5625, 0.4375])

    def test_entropy_uniform(self):
        assert normalized_entropy(np.full(4, 0.25)) == pytest.approx(1.0)

    def test_entropy_collapsed(self):
        """Test that collapsed routing gives a positive zero, not -0.0."""
        value = normalized_entropy(np.array([1.0, 0.0, 0.0]))

        assert value == 0.0
        assert math.copysign(1.0, value) == 1.0
        assert json.dumps(value) == "0.0"

    def test_entropy_single_expert(self):
        assert normalized_entropy(np.array([1.0])) == 1.0

    def test_entropy_two_to_one(self):
        shares = np.array([2 / 3, 1 / 3])
        expected = -(2 / 3 * math.log(2 / 3) + 1 / 3 * math.log(1 / 3)) / math.log(2)
        assert normalized_entropy(shares) == pytest.approx(expected)

    def test_family_histogram_and_purity(self):
        assignments = np.array([0, 0, 0, 1, 1, 2])
        families = np.array([0, 0, 1, 2, 2, 3])

        hist = family_histogram(assignments, families, 3)

        assert hist.tolist() == [[2, 1, 0, 0], [0, 0, 2, 0], [0, 0, 0, 1]]
        assert purity(hist) == pytest.approx(5 / 6)

    def test_purity_empty(self):
        assert purity(np.zeros((2, 4), dtype=np.int64)) == 0.0
