"""
Seeded mini-batch training of the ShapeMoE model.

A run is a pure function of its TrainConfig and datasets. Parameters come
from the seed's init stream; the run stream drives the per-epoch shuffle and
the latent noise, in that order, and is saved with every checkpoint so a
resumed run continues bit for bit.
"""

from __future__ import annotations

import json
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from shapemoe.core.errors import ConfigError, ConfigMismatchError, NumericError
from shapemoe.core.logging import get_logger
from shapemoe.data.models import SceneArrays
from shapemoe.evaluation import evaluate, normalized_entropy
from shapemoe.model import ParameterStore, ShapeMoEModel
from shapemoe.training.losses import total_loss
from shapemoe.training.models import Checkpoint, EpochMetrics, OptimizerState, TrainConfig
from shapemoe.training.optimizer import Adam

logger = get_logger(__name__)

RUN_STREAM = 1


def run_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, RUN_STREAM])


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[EpochMetrics] = field(default_factory=list)


def _check_data(cfg: TrainConfig, data: SceneArrays, label: str) -> None:
    if len(data) == 0:
        raise ConfigError(f"{label} set is empty")
    size = cfg.architecture.image_size
    if data.images.shape[-2:] != (size, size):
        raise ConfigMismatchError(
            f"{label} set has size {data.images.shape[-2:]}, model image_size={size}"
        )


def _offending_block(model: ShapeMoEModel) -> str | None:
    for name, tensor in model.params.items():
        if not np.isfinite(tensor.data).all() or (
            tensor.grad is not None and not np.isfinite(tensor.grad).all()
        ):
            return model.block_of(name)
    return None


def _resume_state(
    cfg: TrainConfig, resume: Checkpoint | None
) -> tuple[ShapeMoEModel, OptimizerState | None, np.random.Generator, int, int]:
    rng = run_rng(cfg.seed)
    if resume is None:
        return ShapeMoEModel.initialize(cfg.architecture, cfg.seed), None, rng, 0, 0
    if resume.config.architecture != cfg.architecture or resume.config.seed != cfg.seed:
        raise ConfigMismatchError("resume checkpoint has a different architecture or seed")
    if resume.epoch > cfg.epochs:
        raise ConfigError(f"checkpoint is at epoch {resume.epoch}, beyond epochs={cfg.epochs}")
    rng.bit_generator.state = resume.rng_state
    model = ShapeMoEModel(cfg.architecture, ParameterStore.from_arrays(resume.params))
    optimizer = OptimizerState(
        m={k: v.copy() for k, v in resume.optimizer.m.items()},
        v={k: v.copy() for k, v in resume.optimizer.v.items()},
        steps=dict(resume.optimizer.steps),
    )
    return model, optimizer, rng, resume.epoch, resume.step


def train(
    cfg: TrainConfig,
    train_set: SceneArrays,
    val_set: SceneArrays | None = None,
    resume: Checkpoint | None = None,
    log_path: Path | None = None,
    on_epoch: Callable[[EpochMetrics], None] | None = None,
) -> TrainResult:
    """
    Train a model and return its final checkpoint and per-epoch metrics.

    Args:
        cfg: Run configuration.
        train_set: Training scenes.
        val_set: Optional validation scenes evaluated after every epoch.
        resume: Checkpoint to continue from; must share seed and architecture.
        log_path: JSON-lines file receiving one EpochMetrics object per epoch.
        on_epoch: Callback invoked with each epoch's metrics.

    Raises:
        ConfigError: On empty or size-mismatched datasets.
        NumericError: On a non-finite loss or gradient, naming step and block.
    """
    _check_data(cfg, train_set, "train")
    if val_set is not None:
        _check_data(cfg, val_set, "val")

    model, opt_state, rng, start_epoch, step = _resume_state(cfg, resume)
    optimizer = Adam(
        model.params, lr=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
        state=opt_state,
    )
    n, d = len(train_set), cfg.architecture.latent_dim
    history: list[EpochMetrics] = []
    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        if resume is None:
            log_path.write_text("")

    for epoch in range(start_epoch + 1, cfg.epochs + 1):
        order = rng.permutation(n)
        totals, ces, balances = [], [], []
        gate_mass = np.zeros(cfg.architecture.num_experts, dtype=np.float64)
        for start in range(0, n, cfg.batch_size):
            batch = train_set.subset(order[start : start + cfg.batch_size])
            eta = rng.standard_normal((len(batch), d))
            step += 1
            optimizer.zero_grad()
            try:
                out = model.forward(batch.images, batch.visible, mode="train", eta=eta)
                loss = total_loss(out.prediction, batch.amodal, out.decision, cfg.balance_weight)
                loss.total.backward()
                block = _offending_block(model)
                if block is not None:
                    raise NumericError("non-finite gradient", block=block)
            except NumericError as e:
                block = e.block or _offending_block(model) or "unknown"
                raise NumericError(
                    f"training aborted at step {step}: {e} (block {block})", block=block, step=step
                ) from e
            optimizer.step()
            totals.append(loss.total.item())
            ces.append(loss.ce.item())
            balances.append(loss.balance.item())
            gate_mass += out.decision.gates.data.sum(axis=0, dtype=np.float64)

        shares = gate_mass / n
        metrics = EpochMetrics(
            epoch=epoch,
            step=step,
            train_loss=float(np.mean(totals)),
            train_ce=float(np.mean(ces)),
            train_balance=float(np.mean(balances)),
            utilization=[float(x) for x in shares],
            utilization_entropy=normalized_entropy(shares),
        )
        if val_set is not None:
            report = evaluate(model, val_set)
            metrics.val_miou_full = report.miou_full
            metrics.val_miou_occ = report.miou_occ
        history.append(metrics)
        logger.info(
            f"epoch {epoch}/{cfg.epochs} step {step}: loss={metrics.train_loss:.5f} "
            f"ce={metrics.train_ce:.5f} balance={metrics.train_balance:.5f} "
            f"val_mIoU_occ={metrics.val_miou_occ}",
            extra={"epoch": epoch, "step": step, "train_loss": metrics.train_loss},
        )
        if log_path is not None:
            with log_path.open("a") as f:
                f.write(json.dumps(metrics.model_dump(mode="json"), sort_keys=True) + "\n")
        if on_epoch is not None:
            on_epoch(metrics)

    checkpoint = Checkpoint(
        config=cfg,
        params={name: t.data.copy() for name, t in model.params.items()},
        step=step,
        epoch=cfg.epochs,
        rng_state=rng.bit_generator.state,
        optimizer=OptimizerState(
            m={k: v.copy() for k, v in optimizer.state.m.items()},
            v={k: v.copy() for k, v in optimizer.state.v.items()},
            steps=dict(optimizer.state.steps),
        ),
    )
    return TrainResult(checkpoint=checkpoint, history=history)


def model_from_checkpoint(ckpt: Checkpoint) -> ShapeMoEModel:
    return ShapeMoEModel(ckpt.config.architecture, ParameterStore.from_arrays(ckpt.params))
