"""IoU and routing-diagnostic statistics over plain arrays."""

from __future__ import annotations

import math

import numpy as np

from shapemoe.core.errors import DimensionError
from shapemoe.data.models import NUM_FAMILIES


def iou(a: np.ndarray, b: np.ndarray) -> float | None:
    """|a & b| / |a | b| of two binary masks; None when both are empty."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"iou shape mismatch: {a.shape} vs {b.shape}")
    a, b = a.astype(bool), b.astype(bool)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return None
    return int(np.count_nonzero(a & b)) / union


def mean_iou_full(predictions: np.ndarray, amodal: np.ndarray) -> float | None:
    scores = [s for s in map(iou, predictions, amodal) if s is not None]
    return float(np.mean(scores)) if scores else None


def mean_iou_occluded(
    predictions: np.ndarray, visible: np.ndarray, amodal: np.ndarray
) -> tuple[float | None, int]:
    """
    Mean IoU of pred & ~visible against amodal & ~visible.

    Samples with an empty ground-truth occluded region are excluded; the
    second value is the number of samples that contributed.
    """
    scores = []
    for pred, vis, amo in zip(predictions, visible, amodal, strict=True):
        hidden = ~vis.astype(bool)
        gt = amo.astype(bool) & hidden
        if not gt.any():
            continue
        scores.append(iou(pred.astype(bool) & hidden, gt))
    return (float(np.mean(scores)) if scores else None), len(scores)


def utilization(gates: np.ndarray) -> np.ndarray:
    """Per-expert share of gate mass; the routed fraction when k=1."""
    return gates.sum(axis=0) / gates.shape[0]


def normalized_entropy(shares: np.ndarray) -> float:
    """Entropy of a distribution divided by ln K; 1.0 for a single expert."""
    k = shares.shape[0]
    if k == 1:
        return 1.0
    nonzero = shares[shares > 0]
    entropy = -(nonzero * np.log(nonzero)).sum() / math.log(k)
    # Adding 0.0 turns the -0.0 of a collapsed distribution into 0.0.
    return float(np.clip(entropy, 0.0, 1.0)) + 0.0


def family_histogram(assignments: np.ndarray, families: np.ndarray, num_experts: int) -> np.ndarray:
    """(K, families) counts of samples per assigned expert and shape family."""
    hist = np.zeros((num_experts, NUM_FAMILIES), dtype=np.int64)
    np.add.at(hist, (assignments, families), 1)
    return hist


def purity(histogram: np.ndarray) -> float:
    """Share of samples whose expert's majority family is their own."""
    total = histogram.sum()
    return float(histogram.max(axis=1).sum() / total) if total else 0.0
