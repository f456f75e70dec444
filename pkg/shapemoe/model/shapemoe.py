"""
End-to-end ShapeMoE pipeline.

Stages: embed the visible mask, encode the shape distribution, sample the
latent, route to k experts, compute shared trunk features, and evaluate only
the selected experts before blending their logits by gate.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from contextlib import contextmanager

import numpy as np

from shapemoe.core.errors import ConfigMismatchError, NumericError
from shapemoe.core.logging import get_logger
from shapemoe.model.config import ArchitectureConfig
from shapemoe.model.experts import ExpertUsageMeter, expert_forward, predict_amodal, trunk_forward
from shapemoe.model.models import ForwardOutput, MaskEmbedding, MaskPrediction, ParameterSummary
from shapemoe.model.params import BLOCK_GROUPS, ParameterStore, expert_prefix, parameter_shapes
from shapemoe.model.router import route
from shapemoe.model.shape_encoder import Mode, embed_mask, encode_distribution, sample_latent
from shapemoe.numerics import Tensor, ops

logger = get_logger(__name__)

INIT_STREAM = 0


@contextmanager
def _block(name: str) -> Iterator[None]:
    """Tag numeric failures raised inside a stage with its parameter block."""
    try:
        yield
    except NumericError as e:
        if e.block is None:
            e.block = name
        raise


class ShapeMoEModel:
    """
    The ShapeMoE model: an architecture plus its named parameters.

    Expert evaluations are counted in `usage`; over any batch the count is
    the number of (sample, selected expert) pairs, never K per sample.
    """

    def __init__(self, arch: ArchitectureConfig, params: ParameterStore):
        expected = parameter_shapes(arch)
        if set(params.names()) != set(expected):
            missing = sorted(set(expected) - set(params.names()))
            extra = sorted(set(params.names()) - set(expected))
            raise ConfigMismatchError(f"parameters do not match architecture: missing={missing} extra={extra}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ConfigMismatchError(
                    f"parameter {name} has shape {params[name].shape}, architecture expects {shape}"
                )
        self.arch = arch
        self.params = params
        self.usage = ExpertUsageMeter(arch.num_experts)

    @classmethod
    def initialize(cls, arch: ArchitectureConfig, seed: int) -> ShapeMoEModel:
        """Fresh model with parameters drawn from the seed's init stream."""
        rng = np.random.default_rng([seed, INIT_STREAM])
        logger.debug(f"initializing K={arch.num_experts}, k={arch.top_k} model from seed {seed}")
        return cls(arch, ParameterStore.initialize(arch, rng))

    def with_params(self, tensors: Mapping[str, Tensor]) -> ShapeMoEModel:
        """Same architecture over substitute tensors (e.g. 64-bit shadows)."""
        return ShapeMoEModel(self.arch, ParameterStore(tensors))

    def _check_inputs(self, images: np.ndarray, visible: np.ndarray) -> None:
        size = self.arch.image_size
        if np.shape(visible)[-2:] != (size, size) or np.shape(images)[-2:] != (size, size):
            raise ConfigMismatchError(
                f"inputs of size {np.shape(visible)[-2:]} do not match model image_size={size}"
            )

    def forward(
        self,
        images: np.ndarray,
        visible: np.ndarray,
        mode: Mode = "infer",
        rng: np.random.Generator | None = None,
        eta: np.ndarray | None = None,
    ) -> ForwardOutput:
        """
        Run the pipeline on a batch.

        Args:
            images: (N, 1, H, W) or a single (1, H, W) image.
            visible: (N, H, W) or a single (H, W) visible mask.
            mode: "train" samples eta, "infer" routes on the distribution mean.
            rng: Noise source for train mode.
            eta: Frozen noise (N, d) used instead of an rng draw.
        """
        self._check_inputs(images, visible)
        p = self.params
        with _block("mask_embedder"):
            embedding = embed_mask(visible, p)
        with _block("shape_encoder"):
            distribution = encode_distribution(embedding, p)
            latent = sample_latent(distribution, mode, rng=rng, eta=eta)
        with _block("router"):
            decision = route(latent, p["router.weight"], self.arch.top_k)
        with _block("trunk"):
            features = trunk_forward(images, visible, p)

        expert_predictions: dict[int, MaskPrediction] = {}
        for j in sorted(np.unique(decision.selected).tolist()):
            rows = decision.rows_for(j)
            sub_embedding = MaskEmbedding(e_m=ops.getitem(embedding.e_m, rows))
            with _block(f"experts.{j}"):
                expert_predictions[j] = expert_forward(j, sub_embedding, ops.getitem(features, rows), p)
            self.usage.record(j, rows.size)
        with _block("experts"):
            prediction = predict_amodal(decision, expert_predictions)

        return ForwardOutput(
            embedding=embedding,
            distribution=distribution,
            latent=latent,
            decision=decision,
            prediction=prediction,
            expert_predictions=expert_predictions,
        )

    def parameter_summary(self) -> ParameterSummary:
        counts = {group: self.params.numel(f"{group}.") for group in BLOCK_GROUPS}
        return ParameterSummary(
            **counts,
            per_expert=self.params.numel(expert_prefix(0)),
            total=self.params.numel(),
            expert_to_trunk_ratio=counts["experts"] / counts["trunk"],
        )

    def block_of(self, name: str) -> str:
        """Block label of a parameter: its group, or `experts.<j>`."""
        parts = name.split(".")
        return ".".join(parts[:2]) if parts[0] == "experts" else parts[0]
