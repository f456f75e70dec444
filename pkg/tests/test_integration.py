"""
Integration tests for end-to-end workflows.
"""

from pathlib import Path

import numpy as np
import pytest

from shapemoe.core.container import Container
from shapemoe.data import GenConfig, generate_corpus, stack_records, write_dataset
from shapemoe.evaluation import evaluate, routing_table
from shapemoe.model import ArchitectureConfig
from shapemoe.training import TrainConfig, model_from_checkpoint, save_checkpoint, train


class TestEndToEnd:
    """Generate, train, checkpoint, reload and evaluate."""

    def test_generate_train_evaluate(self, tmp_path: Path, tiny_arch):
        data_path = tmp_path / "train.smds"
        write_dataset(generate_corpus(GenConfig(seed=2, count=12, side=16)), data_path)
        scenes = Container.load_scenes(data_path, image_size=16)
        cfg = TrainConfig(seed=1, epochs=2, batch_size=4, learning_rate=1e-2, architecture=tiny_arch)

        result = train(cfg, scenes, val_set=scenes)
        ckpt_path = tmp_path / "model.smck"
        save_checkpoint(result.checkpoint, ckpt_path)
        model, loaded = Container.load_model(ckpt_path)

        direct = evaluate(model_from_checkpoint(result.checkpoint), scenes)
        reloaded = evaluate(model, scenes)
        assert direct.model_dump_json() == reloaded.model_dump_json()
        assert loaded.step == 6
        assert result.history[-1].val_miou_full == direct.miou_full
        assert len(routing_table(model, scenes)) == 12


@pytest.mark.slow
class TestAcceptance:
    """Longer training runs checking the trends the design relies on."""

    @pytest.fixture(scope="class")
    def corpus(self):
        scenes = stack_records(generate_corpus(GenConfig(seed=0, count=96, side=32)))
        held_out = stack_records(generate_corpus(GenConfig(seed=1, count=32, side=32)))
        return scenes, held_out

    def _run(self, corpus, **arch_overrides):
        scenes, held_out = corpus
        arch = ArchitectureConfig(
            image_size=32, embed_dim=16, mask_channels=8, trunk_channels=8, feature_channels=16,
            **arch_overrides,
        )
        cfg = TrainConfig(seed=0, epochs=15, batch_size=16, learning_rate=5e-3, architecture=arch)
        result = train(cfg, scenes)
        return result, evaluate(model_from_checkpoint(result.checkpoint), held_out)

    def test_training_reduces_loss(self, corpus):
        result, report = self._run(corpus)
        assert result.history[-1].train_loss < result.history[0].train_loss
        assert report.miou_full is not None and report.miou_full > 0.3

    def test_balance_loss_spreads_routing(self, corpus):
        """Test that the balance term keeps several experts in use."""
        _, report = self._run(corpus, num_experts=4, top_k=1)
        assert np.count_nonzero(report.utilization) >= 2
