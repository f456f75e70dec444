"""Training configuration, per-epoch metrics and the checkpoint record."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, model_validator

from shapemoe.model.config import ArchitectureConfig


class TrainConfig(BaseModel):
    """
    Training run configuration.

    Adam runs without weight decay so that experts receiving no gradient stay
    bitwise unchanged.
    """

    seed: int = Field(default=0, ge=0, lt=2**64, description="Run seed (u64)")
    epochs: int = Field(default=20, ge=0)
    batch_size: int = Field(default=16, ge=1)
    learning_rate: float = Field(default=1e-3, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    balance_weight: float = Field(default=1.0, ge=0.0)
    architecture: ArchitectureConfig = Field(default_factory=ArchitectureConfig)

    @model_validator(mode="after")
    def _check_balance_batch(self) -> TrainConfig:
        if self.balance_weight > 0 and self.architecture.top_k == 1 and self.batch_size < 2:
            raise ValueError("balance loss with top_k=1 needs batch_size >= 2")
        return self


class EpochMetrics(BaseModel):
    """One line of the JSON-lines training log."""

    epoch: int
    step: int
    train_loss: float
    train_ce: float
    train_balance: float
    val_miou_full: float | None = None
    val_miou_occ: float | None = None
    utilization: list[float]
    utilization_entropy: float


@dataclass(eq=False)
class OptimizerState:
    """Adam first/second moments and per-parameter step counts."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    steps: dict[str, int] = field(default_factory=dict)


@dataclass(eq=False)
class Checkpoint:
    """
    Everything needed to resume or evaluate a run.

    Equality is bitwise over tensors, config, counters and RNG state.
    """

    config: TrainConfig
    params: dict[str, np.ndarray]
    step: int = 0
    epoch: int = 0
    rng_state: dict[str, Any] = field(default_factory=dict)
    optimizer: OptimizerState = field(default_factory=OptimizerState)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Checkpoint):
            return NotImplemented
        return (
            self.config == other.config
            and self.step == other.step
            and self.epoch == other.epoch
            and self.rng_state == other.rng_state
            and self.optimizer.steps == other.optimizer.steps
            and _same_arrays(self.params, other.params)
            and _same_arrays(self.optimizer.m, other.optimizer.m)
            and _same_arrays(self.optimizer.v, other.optimizer.v)
        )

    __hash__ = None  # type: ignore[assignment]


def _same_arrays(a: dict[str, np.ndarray], b: dict[str, np.ndarray]) -> bool:
    return a.keys() == b.keys() and all(
        a[k].dtype == b[k].dtype and a[k].shape == b[k].shape and a[k].tobytes() == b[k].tobytes()
        for k in a
    )
