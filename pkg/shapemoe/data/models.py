"""
Data models for synthetic occlusion scenes.

SceneRecord is one generated sample; SceneArrays is the stacked, batch-ready
view of a corpus used by training and evaluation; GenConfig parameterizes
the generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from pydantic import BaseModel, Field, model_validator

from shapemoe.core.errors import DimensionError


class ShapeFamily(IntEnum):
    """Target shape families; values are the on-disk codes."""

    ELLIPSE = 0
    RECTANGLE = 1
    TRIANGLE = 2
    FOUR_POINT_STAR = 3


NUM_FAMILIES = len(ShapeFamily)


class GenConfig(BaseModel):
    """Generator configuration. Generation is a pure function of (seed, index)."""

    seed: int = Field(default=0, ge=0, lt=2**64, description="Corpus seed (u64)")
    count: int = Field(default=1000, ge=0, description="Number of scenes")
    side: int = Field(default=64, ge=8, description="Canvas height and width in pixels")
    occluder_count_min: int = Field(default=1, ge=1)
    occluder_count_max: int = Field(default=3, ge=1)
    visible_fraction_min: float = Field(default=0.30, gt=0.0, le=1.0)
    visible_fraction_max: float = Field(default=0.95, gt=0.0, le=1.0)
    unoccluded_prob: float = Field(default=0.10, ge=0.0, le=1.0)
    noise_sigma: float = Field(default=0.05, ge=0.0)
    families: list[ShapeFamily] = Field(
        default_factory=lambda: list(ShapeFamily),
        min_length=1,
        description="Families the target object is drawn from (occluders use all)",
    )

    @model_validator(mode="after")
    def _check_ranges(self) -> GenConfig:
        if self.occluder_count_min > self.occluder_count_max:
            raise ValueError("occluder count range is not ordered")
        if self.visible_fraction_min > self.visible_fraction_max:
            raise ValueError("visible fraction range is not ordered")
        if self.side % 4 != 0:
            raise ValueError(f"side must be divisible by 4 for the trunk, got {self.side}")
        if len(set(self.families)) != len(self.families):
            raise ValueError("families must not repeat")
        return self


@dataclass(frozen=True, eq=False)
class SceneRecord:
    """
    One synthetic sample.

    image is (1, H, W) float32 in [0, 1]; visible_mask and amodal_mask are
    (H, W) uint8 with values 0/1 and visible_mask implies amodal_mask.
    """

    sample_id: int
    family: ShapeFamily
    image: np.ndarray
    visible_mask: np.ndarray
    amodal_mask: np.ndarray

    @property
    def side(self) -> tuple[int, int]:
        return self.amodal_mask.shape

    @property
    def visible_fraction(self) -> float:
        return float(self.visible_mask.sum()) / float(self.amodal_mask.sum())

    @property
    def occluded_mask(self) -> np.ndarray:
        return (self.amodal_mask.astype(bool) & ~self.visible_mask.astype(bool)).astype(np.uint8)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SceneRecord):
            return NotImplemented
        return (
            self.sample_id == other.sample_id
            and self.family == other.family
            and self.image.dtype == other.image.dtype
            and self.image.tobytes() == other.image.tobytes()
            and self.visible_mask.tobytes() == other.visible_mask.tobytes()
            and self.amodal_mask.tobytes() == other.amodal_mask.tobytes()
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class SceneArrays:
    """A corpus stacked into arrays: images (N,1,H,W), masks (N,H,W), families (N,)."""

    images: np.ndarray
    visible: np.ndarray
    amodal: np.ndarray
    families: np.ndarray
    sample_ids: np.ndarray

    def __len__(self) -> int:
        return int(self.families.shape[0])

    @property
    def side(self) -> int:
        return int(self.amodal.shape[-1])

    def subset(self, indices: np.ndarray) -> SceneArrays:
        idx = np.asarray(indices, dtype=np.intp)
        return SceneArrays(
            images=self.images[idx],
            visible=self.visible[idx],
            amodal=self.amodal[idx],
            families=self.families[idx],
            sample_ids=self.sample_ids[idx],
        )


def stack_records(records: list[SceneRecord]) -> SceneArrays:
    """Stack records that share one canvas size into SceneArrays."""
    if not records:
        raise DimensionError("cannot stack an empty record list")
    sizes = {r.side for r in records}
    if len(sizes) != 1:
        raise DimensionError(f"records have mixed sizes: {sorted(sizes)}")
    return SceneArrays(
        images=np.stack([r.image for r in records]).astype(np.float32, copy=False),
        visible=np.stack([r.visible_mask for r in records]).astype(np.uint8, copy=False),
        amodal=np.stack([r.amodal_mask for r in records]).astype(np.uint8, copy=False),
        families=np.array([int(r.family) for r in records], dtype=np.int64),
        sample_ids=np.array([r.sample_id for r in records], dtype=np.int64),
    )
