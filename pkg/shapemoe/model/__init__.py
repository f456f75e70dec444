"""ShapeMoE model: parameters, shape encoder, router, experts and the pipeline."""

from shapemoe.model.config import DOWNSAMPLE, ArchitectureConfig
from shapemoe.model.experts import (
    ExpertUsageMeter,
    expert_forward,
    predict_amodal,
    trunk_forward,
)
from shapemoe.model.models import (
    ForwardOutput,
    LatentShape,
    MaskEmbedding,
    MaskPrediction,
    ParameterSummary,
    RoutingDecision,
    ShapeDistribution,
)
from shapemoe.model.params import ParameterStore, parameter_shapes
from shapemoe.model.router import cv2_loss, cv_squared, gate_scores, route
from shapemoe.model.shape_encoder import embed_mask, encode_distribution, sample_latent
from shapemoe.model.shapemoe import ShapeMoEModel

__all__ = [
    "DOWNSAMPLE",
    "ArchitectureConfig",
    "ExpertUsageMeter",
    "ForwardOutput",
    "LatentShape",
    "MaskEmbedding",
    "MaskPrediction",
    "ParameterStore",
    "ParameterSummary",
    "RoutingDecision",
    "ShapeDistribution",
    "ShapeMoEModel",
    "cv2_loss",
    "cv_squared",
    "embed_mask",
    "encode_distribution",
    "expert_forward",
    "gate_scores",
    "parameter_shapes",
    "predict_amodal",
    "route",
    "sample_latent",
    "trunk_forward",
]
