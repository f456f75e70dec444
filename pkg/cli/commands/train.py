"""CLI command for training a ShapeMoE model."""

from pathlib import Path

import typer
from rich.table import Table

from cli.common import config_option, console, handle_errors
from shapemoe.core.container import Container
from shapemoe.model import ArchitectureConfig, ShapeMoEModel
from shapemoe.training import EpochMetrics, TrainConfig, load_checkpoint, save_checkpoint, train as run_training


def _print_parameters(model: ShapeMoEModel) -> None:
    summary = model.parameter_summary()
    table = Table(title="Parameters")
    table.add_column("Block", style="cyan")
    table.add_column("Count", justify="right", style="magenta")
    for block in ("trunk", "mask_embedder", "shape_encoder", "router", "experts"):
        table.add_row(block, f"{getattr(summary, block):,}")
    table.add_row("total", f"{summary.total:,}", style="bold")
    console.print(table)
    console.print(f"[dim]Expert bank / trunk:[/dim] {summary.expert_to_trunk_ratio:.1%}")


def _print_epoch(metrics: EpochMetrics) -> None:
    occ = "-" if metrics.val_miou_occ is None else f"{metrics.val_miou_occ:.4f}"
    console.print(
        f"epoch [cyan]{metrics.epoch}[/cyan] loss={metrics.train_loss:.5f} "
        f"ce={metrics.train_ce:.5f} balance={metrics.train_balance:.5f} val_mIoU_occ={occ}"
    )


def train(
    data: Path = typer.Option(..., "--data", help="Training dataset (.smds)"),
    out: Path = typer.Option(..., "--out", help="Output checkpoint (.smck)"),
    val: Path = typer.Option(None, "--val", help="Validation dataset evaluated every epoch"),
    experts: int = typer.Option(4, "--experts", help="K, number of experts"),
    topk: int = typer.Option(1, "--topk", help="k, experts selected per sample"),
    epochs: int = typer.Option(20, "--epochs", help="Training epochs"),
    lr: float = typer.Option(1e-3, "--lr", help="Adam learning rate"),
    balance_weight: float = typer.Option(1.0, "--balance-weight", help="Weight of the CV^2 loss"),
    batch_size: int = typer.Option(16, "--batch-size", help="Samples per optimizer step"),
    latent_dim: int = typer.Option(16, "--latent-dim", help="d, latent shape dimension"),
    expert_hidden: int = typer.Option(8, "--expert-hidden", help="Hypernetwork hidden width"),
    seed: int = typer.Option(0, "--seed", help="Run seed"),
    log: Path = typer.Option(None, "--log", help="JSON-lines metrics log (default: <out>.jsonl)"),
    resume: Path = typer.Option(None, "--resume", help="Checkpoint to continue training from"),
    config: Path = config_option("train"),
):
    """Train a model and write a checkpoint plus a per-epoch metrics log."""
    with handle_errors():
        train_set = Container.load_scenes(data)
        val_set = Container.load_scenes(val, image_size=train_set.side) if val else None
        cfg = TrainConfig(
            seed=seed,
            epochs=epochs,
            batch_size=batch_size,
            learning_rate=lr,
            balance_weight=balance_weight,
            architecture=ArchitectureConfig(
                image_size=train_set.side,
                num_experts=experts,
                top_k=topk,
                latent_dim=latent_dim,
                expert_hidden=expert_hidden,
            ),
        )
        checkpoint = load_checkpoint(resume, expected=cfg.architecture) if resume else None
        _print_parameters(ShapeMoEModel.initialize(cfg.architecture, cfg.seed))
        log_path = log or out.with_name(out.name + ".jsonl")
        result = run_training(
            cfg, train_set, val_set=val_set, resume=checkpoint, log_path=log_path, on_epoch=_print_epoch
        )
        save_checkpoint(result.checkpoint, out)

    console.print(f"[green]OK[/green] Saved checkpoint to {out}")
    console.print(f"[dim]Metrics log:[/dim] {log_path}")
