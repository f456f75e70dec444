"""CLI command for ablation sweeps."""

from pathlib import Path

import typer
from rich.table import Table

from cli.common import config_option, console, handle_errors, parse_list
from shapemoe.core.container import Container
from shapemoe.experiments import SweepAxis, SweepConfig, run_sweep
from shapemoe.model import ArchitectureConfig
from shapemoe.training import TrainConfig


def _fmt(mean: float | None, std: float | None) -> str:
    if mean is None:
        return "-"
    return f"{mean:.4f} ± {std:.4f}"


def sweep(
    axis: SweepAxis = typer.Option(..., "--axis", help="Swept knob: experts, topk or balance"),
    values: str = typer.Option(..., "--values", help="Comma-separated values of the axis"),
    data: Path = typer.Option(..., "--data", help="Training dataset (.smds)"),
    out: Path = typer.Option(..., "--out", help="Output directory for runs and summary.csv"),
    val: Path = typer.Option(None, "--val", help="Validation dataset (default: training set)"),
    seeds: str = typer.Option("0,1,2", "--seeds", help="Comma-separated run seeds"),
    experts: int = typer.Option(4, "--experts", help="K when not swept"),
    topk: int = typer.Option(1, "--topk", help="k when not swept"),
    epochs: int = typer.Option(20, "--epochs", help="Training epochs per run"),
    lr: float = typer.Option(1e-3, "--lr", help="Adam learning rate"),
    balance_weight: float = typer.Option(1.0, "--balance-weight", help="CV^2 weight when not swept"),
    batch_size: int = typer.Option(16, "--batch-size", help="Samples per optimizer step"),
    workers: int = typer.Option(None, "--workers", help="Parallel worker processes"),
    config: Path = config_option("sweep"),
):
    """Train one run per (value, seed) and write a seed-aggregated summary CSV."""
    with handle_errors():
        train_set = Container.load_scenes(data)
        cfg = SweepConfig(
            axis=axis,
            values=parse_list(values, float, "value"),
            seeds=parse_list(seeds, int, "seed"),
            base=TrainConfig(
                epochs=epochs,
                batch_size=batch_size,
                learning_rate=lr,
                balance_weight=balance_weight,
                architecture=ArchitectureConfig(
                    image_size=train_set.side, num_experts=experts, top_k=topk
                ),
            ),
            train_path=data,
            val_path=val,
            out_dir=out,
            workers=workers or Container.get_settings().sweep_workers,
        )
        summary = run_sweep(cfg)

    table = Table(title=f"Sweep over {axis.value}")
    table.add_column(axis.value, style="cyan")
    table.add_column("runs", justify="right")
    table.add_column("mIoU full", justify="right", style="magenta")
    table.add_column("mIoU occluded", justify="right", style="magenta")
    table.add_column("entropy", justify="right")
    table.add_column("purity", justify="right")
    for row in summary.rows:
        table.add_row(
            f"{row.value:g}",
            f"{row.runs - row.failed}/{row.runs}",
            _fmt(row.miou_full_mean, row.miou_full_std),
            _fmt(row.miou_occ_mean, row.miou_occ_std),
            "-" if row.entropy_mean is None else f"{row.entropy_mean:.3f}",
            "-" if row.purity_mean is None else f"{row.purity_mean:.3f}",
        )
    console.print(table)
    console.print(f"[dim]Summary:[/dim] {out / 'summary.csv'}")
    if summary.failures:
        console.print(f"[red]Error:[/red] {summary.failures} run(s) failed; see {out / 'runs.jsonl'}")
        raise typer.Exit(1)
    console.print("[green]OK[/green] Sweep complete")
