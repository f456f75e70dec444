"""Training: loss assembly, Adam, the checkpoint codec and the seeded trainer."""

from shapemoe.training.checkpoint import (
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from shapemoe.training.losses import LossBreakdown, total_loss
from shapemoe.training.models import Checkpoint, EpochMetrics, OptimizerState, TrainConfig
from shapemoe.training.optimizer import Adam
from shapemoe.training.trainer import TrainResult, model_from_checkpoint, run_rng, train

__all__ = [
    "Adam",
    "Checkpoint",
    "EpochMetrics",
    "LossBreakdown",
    "OptimizerState",
    "TrainConfig",
    "TrainResult",
    "decode_checkpoint",
    "encode_checkpoint",
    "load_checkpoint",
    "model_from_checkpoint",
    "run_rng",
    "save_checkpoint",
    "total_loss",
    "train",
]
