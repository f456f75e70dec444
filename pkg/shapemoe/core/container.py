"""
Factory container for ShapeMoE.

Builds the objects the command-line surface needs (settings, datasets,
models restored from checkpoints) in one place, so commands stay thin and
tests can substitute settings.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from shapemoe.core.config import Settings, get_settings
from shapemoe.core.errors import ConfigError, ConfigMismatchError
from shapemoe.core.logging import get_logger

logger = get_logger(__name__)


class Container:
    """
    Simple factory container.

    Settings are a singleton; datasets and models are created per call.
    Domain imports are deferred so `shapemoe.core` has no dependency on the
    model packages.
    """

    @staticmethod
    @lru_cache
    def get_settings() -> Settings:
        """Application settings (singleton)."""
        return get_settings()

    @staticmethod
    def create_settings(**overrides) -> Settings:
        """A fresh Settings instance with overrides, for tests and tooling."""
        return Settings(**overrides)

    @staticmethod
    def load_scenes(path: Path, image_size: int | None = None):
        """
        Read a dataset file into stacked arrays.

        Args:
            path: SMDS dataset file.
            image_size: When given, the dataset side must equal it.

        Raises:
            ConfigError: If the dataset is empty.
            ConfigMismatchError: If the dataset side differs from image_size.
        """
        from shapemoe.data import read_dataset, stack_records

        records = read_dataset(Path(path))
        if not records:
            raise ConfigError(f"dataset {path} contains no records")
        scenes = stack_records(records)
        if image_size is not None and scenes.side != image_size:
            raise ConfigMismatchError(
                f"dataset {path} has side {scenes.side}, model expects {image_size}"
            )
        return scenes

    @staticmethod
    def load_model(path: Path):
        """Restore (model, checkpoint) from a checkpoint file."""
        from shapemoe.training import load_checkpoint, model_from_checkpoint

        checkpoint = load_checkpoint(Path(path))
        return model_from_checkpoint(checkpoint), checkpoint
