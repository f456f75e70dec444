"""CLI command for generating synthetic occlusion datasets."""

from pathlib import Path

import typer
from rich.table import Table

from cli.common import config_option, console, handle_errors, parse_list
from shapemoe.data import GenConfig, ShapeFamily, family_histogram, generate_corpus, write_dataset


def _parse_families(raw: str) -> list[ShapeFamily]:
    def convert(item: str) -> ShapeFamily:
        if item.isdigit():
            return ShapeFamily(int(item))
        try:
            return ShapeFamily[item.upper()]
        except KeyError as e:
            raise ValueError(f"unknown shape family {item!r}") from e

    return parse_list(raw, convert, "family")


def gen(
    out: Path = typer.Option(..., "--out", help="Output dataset file (.smds)"),
    seed: int = typer.Option(0, "--seed", help="Corpus seed"),
    count: int = typer.Option(1000, "--count", help="Number of scenes"),
    size: int = typer.Option(64, "--size", help="Canvas side in pixels (divisible by 4)"),
    unoccluded_prob: float = typer.Option(
        0.10, "--unoccluded-prob", help="Probability that a scene has no occluder"
    ),
    families: str = typer.Option(
        None, "--families", help="Comma-separated target families (codes or names); default all"
    ),
    config: Path = config_option("gen"),
):
    """Generate a dataset of occluded shapes with amodal ground truth."""
    with handle_errors():
        fields = {"seed": seed, "count": count, "side": size, "unoccluded_prob": unoccluded_prob}
        if families:
            fields["families"] = _parse_families(families)
        cfg = GenConfig(**fields)
        records = generate_corpus(cfg)
        write_dataset(records, out, size=(size, size), config=cfg)

    console.print(f"[green]OK[/green] Wrote {len(records)} scenes to {out}")
    table = Table(title="Family histogram")
    table.add_column("Family", style="cyan")
    table.add_column("Count", justify="right", style="magenta")
    for family, n in family_histogram(records).items():
        table.add_row(family.name.lower(), str(n))
    console.print(table)
