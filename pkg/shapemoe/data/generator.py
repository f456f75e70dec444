"""
Procedural generator of occluded scenes.

Each scene is a pure function of (seed, index): the per-sample generator is
seeded with a splitmix64 mix of the two, so corpora can be generated in any
order or in parallel and still match bit for bit.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from shapemoe.core.errors import ConfigError, GenerationError
from shapemoe.core.logging import get_logger
from shapemoe.data.models import GenConfig, SceneRecord, ShapeFamily
from shapemoe.data.shapes import rasterize, sample_shape

logger = get_logger(__name__)

MAX_ATTEMPTS = 100
MIN_INTENSITY_GAP = 0.15

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(seed: int, index: int) -> int:
    """splitmix64 of the corpus seed advanced by index + 1 steps."""
    z = (seed + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _draw_intensities(rng: np.random.Generator) -> tuple[float, float, float]:
    """Background, target and occluder levels in [0.1, 0.9], pairwise >= 0.15 apart."""
    while True:
        levels = rng.uniform(0.1, 0.9, size=3)
        gaps = np.abs(levels[:, None] - levels[None, :])[np.triu_indices(3, k=1)]
        if gaps.min() >= MIN_INTENSITY_GAP:
            return float(levels[0]), float(levels[1]), float(levels[2])


def generate_scene(cfg: GenConfig, index: int) -> SceneRecord:
    """
    Generate scene `index` of the corpus described by `cfg`.

    Raises:
        ConfigError: If index is outside [0, cfg.count).
        GenerationError: If no acceptable scene is found within 100 attempts.
    """
    if not 0 <= index < cfg.count:
        raise ConfigError(f"scene index {index} out of range for count {cfg.count}")

    rng = np.random.default_rng(derive_seed(cfg.seed, index))
    family = cfg.families[int(rng.integers(len(cfg.families)))]
    unoccluded = bool(rng.random() < cfg.unoccluded_prob)
    side = cfg.side

    for attempt in range(MAX_ATTEMPTS):
        target = sample_shape(family, rng, side)
        amodal = rasterize(target, side)
        if not amodal.any():
            continue
        background, foreground, occluder_level = _draw_intensities(rng)

        occluders = np.zeros_like(amodal)
        if not unoccluded:
            n_occluders = int(rng.integers(cfg.occluder_count_min, cfg.occluder_count_max + 1))
            for _ in range(n_occluders):
                occluder_family = ShapeFamily(int(rng.integers(len(ShapeFamily))))
                occluders |= rasterize(sample_shape(occluder_family, rng, side, near=target), side)
        visible = amodal & ~occluders

        fraction = visible.sum() / amodal.sum()
        if not unoccluded and not (
            cfg.visible_fraction_min <= fraction <= cfg.visible_fraction_max
        ):
            continue

        image = np.full((side, side), background, dtype=np.float64)
        image[amodal] = foreground
        image[occluders] = occluder_level
        image += rng.normal(0.0, cfg.noise_sigma, size=image.shape)
        image = np.clip(image, 0.0, 1.0).astype(np.float32)

        if attempt:
            logger.debug(f"scene {index}: accepted after {attempt + 1} attempts")
        return SceneRecord(
            sample_id=index,
            family=family,
            image=image[None, :, :],
            visible_mask=visible.astype(np.uint8),
            amodal_mask=amodal.astype(np.uint8),
        )

    raise GenerationError(index, MAX_ATTEMPTS)


def generate_corpus(cfg: GenConfig) -> list[SceneRecord]:
    """Generate every scene of the corpus in index order."""
    records = [generate_scene(cfg, i) for i in range(cfg.count)]
    logger.info(f"generated {len(records)} scenes (seed={cfg.seed}, side={cfg.side})")
    return records


def family_histogram(records: list[SceneRecord]) -> dict[ShapeFamily, int]:
    """Count of records per family, every family present as a key."""
    counts = Counter(r.family for r in records)
    return {family: counts.get(family, 0) for family in ShapeFamily}
