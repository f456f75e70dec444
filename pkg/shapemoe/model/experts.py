"""
Shared feature trunk and hypernetwork expert bank.

The trunk encodes concat(image, visible mask) with two stride-2 convs and
refines the result with two stride-1 convs into F of shape (C, H/4, W/4).
Expert j maps the query concat(e_m, mean-pool(F)) to a weight vector w_j and
scores every feature position as <F[:, p], w_j> + b_j, upsampled by 4.
"""

from __future__ import annotations

import threading
from collections.abc import Mapping

import numpy as np

from shapemoe.core.errors import ConfigError, DimensionError
from shapemoe.model.config import DOWNSAMPLE
from shapemoe.model.models import MaskEmbedding, MaskPrediction, RoutingDecision
from shapemoe.model.params import expert_prefix
from shapemoe.model.shape_encoder import as_batch
from shapemoe.numerics import Tensor, ops


class ExpertUsageMeter:
    """Counts expert evaluations, one per sample per evaluated expert."""

    def __init__(self, num_experts: int):
        self._lock = threading.Lock()
        self._counts = np.zeros(num_experts, dtype=np.int64)

    def record(self, j: int, n_samples: int) -> None:
        with self._lock:
            self._counts[j] += n_samples

    @property
    def counts(self) -> np.ndarray:
        return self._counts.copy()

    @property
    def total(self) -> int:
        return int(self._counts.sum())

    def reset(self) -> None:
        with self._lock:
            self._counts[:] = 0


def _conv_relu(x: Tensor, params: Mapping[str, Tensor], name: str, stride: int) -> Tensor:
    return ops.relu(ops.conv2d(x, params[f"{name}.weight"], params[f"{name}.bias"], stride=stride))


def trunk_forward(image: np.ndarray, visible: np.ndarray, params: Mapping[str, Tensor]) -> Tensor:
    """
    Refined features F for images (1, H, W) / (N, 1, H, W) and visible masks (H, W) / (N, H, W).

    Returns a (N, C, H/4, W/4) tensor.
    """
    dtype = params["trunk.conv1.weight"].dtype
    images = as_batch(image, 4, dtype, "image")
    masks = as_batch(visible, 3, dtype, "visible mask")
    if images.shape[1] != 1 or images.shape[0] != masks.shape[0] or images.shape[2:] != masks.shape[1:]:
        raise DimensionError(f"image {images.shape} and visible mask {masks.shape} do not match")
    if images.shape[2] % DOWNSAMPLE or images.shape[3] % DOWNSAMPLE:
        raise DimensionError(f"image size {images.shape[2:]} is not divisible by {DOWNSAMPLE}")
    x = Tensor(np.concatenate([images, masks[:, None]], axis=1))
    h = _conv_relu(x, params, "trunk.conv1", stride=2)
    h = _conv_relu(h, params, "trunk.conv2", stride=2)
    h = _conv_relu(h, params, "trunk.refine1", stride=1)
    return _conv_relu(h, params, "trunk.refine2", stride=1)


def expert_weights(j: int, embedding: MaskEmbedding, features: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """Hypernetwork output w_j, shape (n, C)."""
    p = expert_prefix(j)
    query = ops.concat([embedding.e_m, ops.mean_pool_spatial(features)], axis=1)
    hidden = ops.relu(ops.linear(query, params[f"{p}fc1.weight"], params[f"{p}fc1.bias"]))
    return ops.linear(hidden, params[f"{p}fc2.weight"], params[f"{p}fc2.bias"])


def expert_forward(
    j: int, embedding: MaskEmbedding, features: Tensor, params: Mapping[str, Tensor]
) -> MaskPrediction:
    """
    Full-resolution mask logits of expert j for n samples.

    Raises:
        ConfigError: If expert j does not exist.
        DimensionError: If e_m and F disagree on the sample count.
    """
    if j < 0 or f"{expert_prefix(j)}bias" not in params:
        raise ConfigError(f"expert index {j} out of range")
    if features.ndim == 3:
        features = ops.reshape(features, (1,) + features.shape)
    if features.ndim != 4 or embedding.e_m.shape[0] != features.shape[0]:
        raise DimensionError(
            f"mask embedding {embedding.e_m.shape} and features {features.shape} do not match"
        )
    n, channels = features.shape[:2]
    w = expert_weights(j, embedding, features, params)
    low = ops.sum(ops.mul(features, ops.reshape(w, (n, channels, 1, 1))), axis=1)
    low = ops.add(low, params[f"{expert_prefix(j)}bias"])
    return MaskPrediction(logits=ops.bilinear_upsample(low, DOWNSAMPLE))


def predict_amodal(
    decision: RoutingDecision, expert_logits: Mapping[int, MaskPrediction | Tensor]
) -> MaskPrediction:
    """
    Gate-weighted sum of selected experts' logits.

    `expert_logits[j]` holds the logits of exactly the samples that selected j,
    in ascending sample order. Each sample's terms are added by gate rank,
    largest gate first, so relabeling the experts leaves the result bitwise
    unchanged. With k=1 the gate is 1 and the output equals the selected
    expert's logits.
    """
    n = len(decision)
    if decision.selected.size == 0:
        raise ConfigError("routing decision selects no experts")
    routed: dict[int, tuple[np.ndarray, Tensor]] = {}
    for j in np.unique(decision.selected).tolist():
        if j not in expert_logits:
            raise ConfigError(f"missing logits for selected expert {j}")
        logits = expert_logits[j]
        logits = logits.logits if isinstance(logits, MaskPrediction) else logits
        rows = decision.rows_for(j)
        if logits.ndim == 2:
            logits = ops.reshape(logits, (1,) + logits.shape)
        if logits.shape[0] != rows.size:
            raise DimensionError(
                f"expert {j} produced {logits.shape[0]} predictions for {rows.size} routed samples"
            )
        gate = ops.reshape(ops.getitem(decision.gates, (rows, j)), (rows.size, 1, 1))
        routed[j] = (rows, ops.mul(gate, logits))

    ranked = decision.ranked()
    combined: Tensor | None = None
    for r in range(ranked.shape[1]):
        # Every sample has exactly one expert at rank r: gather, then restore sample order.
        pieces, owners = [], []
        for j in np.unique(ranked[:, r]).tolist():
            rows, weighted = routed[j]
            samples = np.nonzero(ranked[:, r] == j)[0]
            pieces.append(ops.getitem(weighted, np.searchsorted(rows, samples)))
            owners.append(samples)
        stacked = pieces[0] if len(pieces) == 1 else ops.concat(pieces, axis=0)
        term = ops.getitem(stacked, np.argsort(np.concatenate(owners), kind="stable"))
        combined = term if combined is None else ops.add(combined, term)
    return MaskPrediction(logits=combined)
