"""Sweep configuration and result records."""

from __future__ import annotations

from enum import Enum
from pathlib import Path

from pydantic import BaseModel, Field, model_validator

from shapemoe.training.models import TrainConfig


class SweepAxis(str, Enum):
    EXPERTS = "experts"
    TOPK = "topk"
    BALANCE = "balance"


class SweepConfig(BaseModel):
    """One ablation: a base run varied along one axis over several seeds."""

    axis: SweepAxis
    values: list[float] = Field(min_length=1)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2], min_length=1)
    base: TrainConfig = Field(default_factory=TrainConfig)
    train_path: Path
    val_path: Path | None = None
    out_dir: Path
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_values(self) -> SweepConfig:
        for value in self.values:
            if self.axis is SweepAxis.BALANCE:
                if value < 0:
                    raise ValueError(f"balance weight must be >= 0, got {value}")
                continue
            if value != int(value) or value < 1:
                raise ValueError(f"{self.axis.value} values must be positive integers, got {value}")
            arch = self.base.architecture
            if self.axis is SweepAxis.EXPERTS and value < arch.top_k:
                raise ValueError(f"experts={int(value)} is below top_k={arch.top_k}")
            if self.axis is SweepAxis.TOPK and value > arch.num_experts:
                raise ValueError(f"topk={int(value)} exceeds num_experts={arch.num_experts}")
        if len(set(self.values)) != len(self.values):
            raise ValueError("sweep values must not repeat")
        return self


class RunOutcome(BaseModel):
    """Result of one (value, seed) child run."""

    value: float
    seed: int
    miou_full: float | None = None
    miou_occ: float | None = None
    utilization_entropy: float | None = None
    purity: float | None = None
    checkpoint: str | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class SweepRow(BaseModel):
    """Seed-aggregated summary of one sweep value (population std over seeds)."""

    value: float
    runs: int
    failed: int
    miou_full_mean: float | None
    miou_full_std: float | None
    miou_occ_mean: float | None
    miou_occ_std: float | None
    entropy_mean: float | None
    purity_mean: float | None


class SweepSummary(BaseModel):
    axis: SweepAxis
    rows: list[SweepRow]
    outcomes: list[RunOutcome]

    @property
    def failures(self) -> int:
        return sum(o.failed for o in self.outcomes)
