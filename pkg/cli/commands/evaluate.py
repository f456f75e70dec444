"""CLI commands for evaluating a checkpoint and inspecting its routing."""

from pathlib import Path

import numpy as np
import typer
from rich.table import Table

from cli.common import config_option, console, handle_errors
from shapemoe.core.container import Container
from shapemoe.evaluation import evaluate as evaluate_model
from shapemoe.evaluation import routing_table, write_routing_csv


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def _routing_rng(stochastic: bool, seed: int) -> np.random.Generator | None:
    return np.random.default_rng(seed) if stochastic else None


def evaluate(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint (.smck)"),
    data: Path = typer.Option(..., "--data", help="Dataset (.smds)"),
    report: Path = typer.Option(..., "--report", help="Output EvalReport JSON"),
    stochastic_routing: bool = typer.Option(
        False, "--stochastic-routing", help="Sample the latent at inference instead of using its mean"
    ),
    seed: int = typer.Option(0, "--seed", help="Seed for stochastic routing"),
    batch_size: int = typer.Option(None, "--batch-size", help="Samples per forward pass"),
    config: Path = config_option("eval"),
):
    """Evaluate a checkpoint and write an EvalReport JSON."""
    with handle_errors():
        model, _ = Container.load_model(ckpt)
        scenes = Container.load_scenes(data, image_size=model.arch.image_size)
        result = evaluate_model(
            model, scenes, batch_size=batch_size, rng=_routing_rng(stochastic_routing, seed)
        )
        report.parent.mkdir(parents=True, exist_ok=True)
        report.write_text(result.model_dump_json(indent=2) + "\n")

    table = Table(title="Evaluation")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", justify="right", style="magenta")
    table.add_row("samples", str(result.n_samples))
    table.add_row("occluded samples", str(result.n_occluded_samples))
    table.add_row("mIoU full", _fmt(result.miou_full))
    table.add_row("mIoU occluded", _fmt(result.miou_occ))
    table.add_row("utilization entropy", _fmt(result.utilization_entropy_normalized))
    table.add_row("purity", _fmt(result.purity))
    console.print(table)
    console.print(f"[green]OK[/green] Wrote report to {report}")


def inspect(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint (.smck)"),
    data: Path = typer.Option(..., "--data", help="Dataset (.smds)"),
    csv: Path = typer.Option(..., "--csv", help="Output routing table CSV"),
    stochastic_routing: bool = typer.Option(
        False, "--stochastic-routing", help="Sample the latent at inference instead of using its mean"
    ),
    seed: int = typer.Option(0, "--seed", help="Seed for stochastic routing"),
    batch_size: int = typer.Option(None, "--batch-size", help="Samples per forward pass"),
    config: Path = config_option("inspect"),
):
    """Write the per-sample routing table (experts, gates, mu, std) as CSV."""
    with handle_errors():
        model, _ = Container.load_model(ckpt)
        scenes = Container.load_scenes(data, image_size=model.arch.image_size)
        rows = routing_table(
            model, scenes, batch_size=batch_size, rng=_routing_rng(stochastic_routing, seed)
        )
        write_routing_csv(rows, csv)

    console.print(f"[green]OK[/green] Wrote {len(rows)} routing rows to {csv}")
