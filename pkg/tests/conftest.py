"""
Pytest configuration and shared fixtures for ShapeMoE tests.
"""

import tempfile
from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest

from shapemoe.core.config import Settings
from shapemoe.data import GenConfig, SceneArrays, SceneRecord, generate_corpus, stack_records
from shapemoe.model import ArchitectureConfig, ShapeMoEModel
from shapemoe.training import TrainConfig


@pytest.fixture
def test_settings() -> Settings:
    """
    Provide test-specific settings with safe defaults.

    Returns:
        Settings: Test configuration instance
    """
    return Settings(app_name="ShapeMoE Test", log_level="DEBUG", json_logs=False, eval_batch_size=4)


@pytest.fixture
def tmp_data_dir() -> Generator[Path, None, None]:
    """
    Provide an isolated temporary directory for test data.

    Yields:
        Path: Temporary data directory path
    """
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def tiny_gen_config() -> GenConfig:
    """Eight 16x16 scenes."""
    return GenConfig(seed=3, count=8, side=16)


@pytest.fixture
def tiny_records(tiny_gen_config: GenConfig) -> list[SceneRecord]:
    return generate_corpus(tiny_gen_config)


@pytest.fixture
def tiny_scenes(tiny_records: list[SceneRecord]) -> SceneArrays:
    return stack_records(tiny_records)


@pytest.fixture
def tiny_arch() -> ArchitectureConfig:
    """A 16x16 architecture with narrow layers, fast enough for gradient checks."""
    return ArchitectureConfig(
        image_size=16,
        num_experts=4,
        top_k=1,
        latent_dim=4,
        embed_dim=6,
        mask_channels=3,
        encoder_hidden=5,
        trunk_channels=3,
        feature_channels=4,
        expert_hidden=3,
    )


@pytest.fixture
def tiny_model(tiny_arch: ArchitectureConfig) -> ShapeMoEModel:
    return ShapeMoEModel.initialize(tiny_arch, seed=11)


@pytest.fixture
def tiny_train_config(tiny_arch: ArchitectureConfig) -> TrainConfig:
    return TrainConfig(seed=5, epochs=2, batch_size=4, learning_rate=1e-2, architecture=tiny_arch)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def dataset_file(tmp_data_dir: Path, tiny_records: list[SceneRecord], tiny_gen_config: GenConfig) -> Path:
    """The tiny corpus written to disk with its manifest."""
    from shapemoe.data import write_dataset

    path = tmp_data_dir / "tiny.smds"
    write_dataset(tiny_records, path, config=tiny_gen_config)
    return path
