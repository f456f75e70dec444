"""
Domain types flowing through the ShapeMoE pipeline.

All types hold batched Tensors with the sample axis first. Single-sample
callers pass a leading axis of size one; `sample(i)` views one row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field

from shapemoe.numerics import Tensor, ops

THRESHOLD = 0.5


@dataclass(frozen=True)
class MaskEmbedding:
    """e_m, shape (N, d_e)."""

    e_m: Tensor


@dataclass(frozen=True)
class ShapeDistribution:
    """Gaussian shape distribution; effective std is softplus(sigma_raw)."""

    mu: Tensor
    sigma_raw: Tensor

    def std(self) -> np.ndarray:
        return ops.softplus(self.sigma_raw.detach()).data


@dataclass(frozen=True)
class LatentShape:
    """Latent l_o together with the noise eta that produced it."""

    l_o: Tensor
    eta: np.ndarray


@dataclass(frozen=True)
class RoutingDecision:
    """
    Scores s (N, K), dense gates pi (N, K) and the sorted selected indices (N, k).

    pi is zero outside `selected` and each row sums to one.
    """

    scores: Tensor
    gates: Tensor
    selected: np.ndarray

    @property
    def num_experts(self) -> int:
        return self.gates.shape[-1]

    @property
    def top_k(self) -> int:
        return self.selected.shape[-1]

    def __len__(self) -> int:
        return self.gates.shape[0]

    def rows_for(self, j: int) -> np.ndarray:
        """Sample indices, ascending, that selected expert j."""
        return np.nonzero((self.selected == j).any(axis=-1))[0]

    def ranked(self) -> np.ndarray:
        """Selected experts per sample (N, k), highest gate first; lower index wins ties."""
        selected_gates = np.take_along_axis(self.gates.data, self.selected, axis=-1)
        order = np.lexsort((self.selected, -selected_gates), axis=-1)
        return np.take_along_axis(self.selected, order, axis=-1)

    def top_expert(self) -> np.ndarray:
        """Highest-gate expert per sample; lower index wins ties."""
        return np.argmax(self.gates.data, axis=-1)

    def sample(self, i: int) -> RoutingDecision:
        return RoutingDecision(
            scores=self.scores.detach()[i : i + 1],
            gates=self.gates.detach()[i : i + 1],
            selected=self.selected[i : i + 1],
        )


@dataclass(frozen=True)
class MaskPrediction:
    """Amodal mask logits (N, H, W); probability and binary views derive from them."""

    logits: Tensor

    @property
    def probability(self) -> np.ndarray:
        return ops.sigmoid(self.logits.detach()).data

    @property
    def binary(self) -> np.ndarray:
        return (self.probability >= THRESHOLD).astype(np.uint8)


@dataclass(frozen=True)
class ForwardOutput:
    """Everything one pipeline pass produced, kept for losses and diagnostics."""

    embedding: MaskEmbedding
    distribution: ShapeDistribution
    latent: LatentShape
    decision: RoutingDecision
    prediction: MaskPrediction
    expert_predictions: dict[int, MaskPrediction]


class ParameterSummary(BaseModel):
    """Parameter counts per block group and the expert-bank overhead."""

    trunk: int
    mask_embedder: int
    shape_encoder: int
    router: int
    experts: int
    per_expert: int
    total: int
    expert_to_trunk_ratio: float = Field(description="Expert bank size over trunk size")
