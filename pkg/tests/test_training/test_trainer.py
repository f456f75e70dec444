"""
Tests for seeded training, resume and the training log.
"""

import json

import numpy as np
import pytest

from shapemoe.core.errors import ConfigError, ConfigMismatchError, NumericError
from shapemoe.data import GenConfig, generate_corpus, stack_records
from shapemoe.evaluation import evaluate
from shapemoe.training import (
    Checkpoint,
    EpochMetrics,
    TrainConfig,
    model_from_checkpoint,
    run_rng,
    train,
)


class TestTrainConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert (cfg.epochs, cfg.batch_size, cfg.learning_rate) == (20, 16, 1e-3)
        assert cfg.balance_weight == 1.0

    def test_balance_needs_batch_of_two(self):
        with pytest.raises(ValueError):
            TrainConfig(batch_size=1)

    def test_batch_of_one_without_balance(self):
        assert TrainConfig(batch_size=1, balance_weight=0.0).batch_size == 1


class TestTrain:
    def test_history_and_log(self, tiny_train_config, tiny_scenes, tmp_data_dir):
        """Test that every epoch produces one metrics record and one log line."""
        log = tmp_data_dir / "run.jsonl"
        seen: list[EpochMetrics] = []

        result = train(tiny_train_config, tiny_scenes, val_set=tiny_scenes, log_path=log, on_epoch=seen.append)

        assert [m.epoch for m in result.history] == [1, 2]
        assert seen == result.history
        assert result.checkpoint.epoch == 2
        assert result.checkpoint.step == 2 * 2
        lines = [json.loads(line) for line in log.read_text().splitlines()]
        assert [line["epoch"] for line in lines] == [1, 2]
        assert lines[-1]["val_miou_full"] == result.history[-1].val_miou_full
        assert sum(lines[0]["utilization"]) == pytest.approx(1.0)

    def test_deterministic(self, tiny_train_config, tiny_scenes):
        """Test that two runs with one config give equal checkpoints and losses."""
        a = train(tiny_train_config, tiny_scenes)
        b = train(tiny_train_config, tiny_scenes)

        assert a.checkpoint == b.checkpoint
        assert [m.train_loss for m in a.history] == [m.train_loss for m in b.history]

    def test_seed_changes_run(self, tiny_train_config, tiny_scenes):
        a = train(tiny_train_config, tiny_scenes)
        b = train(tiny_train_config.model_copy(update={"seed": 6}), tiny_scenes)
        assert a.checkpoint != b.checkpoint

    def test_resume_matches_uninterrupted(self, tiny_train_config, tiny_scenes):
        """Test that 1 epoch plus a resumed epoch equals 2 straight epochs, bit for bit."""
        straight = train(tiny_train_config, tiny_scenes)
        first = train(tiny_train_config.model_copy(update={"epochs": 1}), tiny_scenes)

        resumed = train(tiny_train_config, tiny_scenes, resume=first.checkpoint)

        assert resumed.checkpoint == straight.checkpoint
        assert [m.epoch for m in resumed.history] == [2]

    def test_resume_appends_to_log(self, tiny_train_config, tiny_scenes, tmp_data_dir):
        log = tmp_data_dir / "run.jsonl"
        first = train(tiny_train_config.model_copy(update={"epochs": 1}), tiny_scenes, log_path=log)
        train(tiny_train_config, tiny_scenes, resume=first.checkpoint, log_path=log)

        assert [json.loads(line)["epoch"] for line in log.read_text().splitlines()] == [1, 2]

    def test_resume_with_different_architecture(self, tiny_train_config, tiny_scenes):
        first = train(tiny_train_config.model_copy(update={"epochs": 1}), tiny_scenes)
        arch = tiny_train_config.architecture.model_copy(update={"num_experts": 3})
        other = tiny_train_config.model_copy(update={"architecture": arch})

        with pytest.raises(ConfigMismatchError):
            train(other, tiny_scenes, resume=first.checkpoint)

    def test_zero_epochs_returns_initial_model(self, tiny_train_config, tiny_scenes, tiny_arch):
        from shapemoe.model import ShapeMoEModel

        result = train(tiny_train_config.model_copy(update={"epochs": 0}), tiny_scenes)
        initial = ShapeMoEModel.initialize(tiny_arch, tiny_train_config.seed).params.as_arrays()

        assert result.history == []
        assert all(result.checkpoint.params[n].tobytes() == initial[n].tobytes() for n in initial)

    def test_empty_train_set(self, tiny_train_config, tiny_scenes):
        with pytest.raises(ConfigError):
            train(tiny_train_config, tiny_scenes.subset(np.array([], dtype=np.intp)))

    def test_size_mismatch(self, tiny_train_config):
        scenes = stack_records(generate_corpus(GenConfig(seed=0, count=4, side=32)))
        with pytest.raises(ConfigMismatchError):
            train(tiny_train_config, scenes)

    def test_divergence_names_step_and_block(self, tiny_train_config, tiny_scenes):
        """Test that an overflowing learning rate aborts with the step and block."""
        cfg = tiny_train_config.model_copy(update={"learning_rate": 1e30, "epochs": 3})

        with pytest.raises(NumericError) as exc_info:
            train(cfg, tiny_scenes)

        assert exc_info.value.step is not None and exc_info.value.step >= 2
        assert exc_info.value.block is not None
        assert "training aborted at step" in str(exc_info.value)

    def test_never_selected_expert_is_unchanged(self, tiny_train_config, tiny_scenes):
        """Test that an expert no sample ever selects keeps its initial parameters."""
        from shapemoe.model import ShapeMoEModel

        arrays = {
            n: a.copy()
            for n, a in ShapeMoEModel.initialize(tiny_train_config.architecture, 0).params.as_arrays().items()
        }
        arrays["shape_encoder.mu.fc2.weight"][...] = 0.0
        arrays["shape_encoder.mu.fc2.bias"][...] = 1.0
        arrays["shape_encoder.sigma.fc2.weight"][...] = 0.0
        arrays["shape_encoder.sigma.fc2.bias"][...] = -20.0
        arrays["router.weight"][...] = np.array(
            [[1, 0, 0, 0], [0, 1, 1, 0], [0, 0, 0, 0.5], [-10, 0, 0, 0]], dtype=np.float32
        )
        start = Checkpoint(
            config=tiny_train_config,
            params=arrays,
            rng_state=run_rng(tiny_train_config.seed).bit_generator.state,
        )

        result = train(tiny_train_config, tiny_scenes, resume=start)

        for name, array in arrays.items():
            if name.startswith("experts.3."):
                assert result.checkpoint.params[name].tobytes() == array.tobytes(), name
        assert result.checkpoint.optimizer.steps["experts.3.fc1.weight"] == 0
        assert result.checkpoint.optimizer.steps["experts.1.fc1.weight"] == result.checkpoint.step


@pytest.mark.slow
class TestLearning:
    def test_overfits_small_corpus(self):
        """Test that cross-entropy on a 32-scene subset falls below 0.05 within 200 epochs."""
        scenes = stack_records(generate_corpus(GenConfig(seed=1, count=32)))
        cfg = TrainConfig(seed=0, epochs=200, batch_size=16, learning_rate=3e-3)

        result = train(cfg, scenes)

        assert min(epoch.train_ce for epoch in result.history) < 0.05
        report = evaluate(model_from_checkpoint(result.checkpoint), scenes)
        assert report.miou_full > 0.9
