"""
Shape-aware sparse routing and the importance-balancing loss.

Scores are s = W l_o (no bias). The top-k scores are kept, the rest are set
to -inf, and a softmax over the masked scores gives the gate pi. Masked
entries receive exactly zero gradient.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from shapemoe.core.errors import ConfigError, DimensionError
from shapemoe.model.models import LatentShape, RoutingDecision
from shapemoe.numerics import Tensor, ops

CV2_EPS = 1e-10


def gate_scores(scores: Tensor, k: int) -> RoutingDecision:
    """Top-k mask and softmax over precomputed scores (N, K)."""
    num_experts = scores.shape[-1]
    if not 1 <= k <= num_experts:
        raise ConfigError(f"top_k={k} out of range for {num_experts} experts")
    masked = ops.topk_mask(scores, k)
    gates = ops.softmax(masked, axis=-1)
    keep = np.isfinite(masked.data)
    selected = np.nonzero(keep)[1].reshape(scores.shape[0], k)
    return RoutingDecision(scores=scores, gates=gates, selected=selected)


def route(latent: LatentShape | Tensor, weight: Tensor, k: int) -> RoutingDecision:
    """
    Route latent shapes (N, d) or a single (d,) latent to k of K experts.

    Raises:
        ConfigError: If k is outside [1, K].
        DimensionError: If the latent width does not match W.
    """
    l_o = latent.l_o if isinstance(latent, LatentShape) else latent
    if l_o.ndim == 1:
        l_o = ops.reshape(l_o, (1, l_o.shape[0]))
    if l_o.ndim != 2 or weight.ndim != 2 or l_o.shape[1] != weight.shape[1]:
        raise DimensionError(f"latent {l_o.shape} incompatible with router weight {weight.shape}")
    if not 1 <= k <= weight.shape[0]:
        raise ConfigError(f"top_k={k} out of range for {weight.shape[0]} experts")
    return gate_scores(ops.matmul(l_o, ops.transpose(weight)), k)


def cv_squared(importance: Tensor) -> Tensor:
    """Var_pop(I) / (Mean(I)^2 + 1e-10) of a per-expert importance vector."""
    m = ops.mean(importance)
    diff = ops.sub(importance, m)
    variance = ops.mean(ops.mul(diff, diff))
    return ops.div(variance, ops.add(ops.mul(m, m), CV2_EPS))


def cv2_loss(gates: RoutingDecision | Sequence[RoutingDecision]) -> Tensor:
    """CV^2 of per-expert summed gate mass over a batch of decisions."""
    if isinstance(gates, RoutingDecision):
        matrix = gates.gates
    else:
        if not gates:
            raise ConfigError("cv2_loss needs at least one routing decision")
        matrix = ops.concat([d.gates for d in gates], axis=0)
    if matrix.shape[0] < 1:
        raise ConfigError("cv2_loss needs at least one routing decision")
    return cv_squared(ops.sum(matrix, axis=0))
