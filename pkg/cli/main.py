"""Main CLI entry point for ShapeMoE."""

import sys

import typer

try:  # typer >= 0.20 vendors click and raises its own exception classes
    from typer._click import exceptions as click_exceptions
except ImportError:
    from click import exceptions as click_exceptions

from cli.commands import evaluate, gen, sweep, train
from cli.common import console
from shapemoe import __version__
from shapemoe.core.logging import configure_logging

# Create the main app
app = typer.Typer(
    name="shapemoe",
    help="ShapeMoE - shape-aware sparse mixture of experts for amodal segmentation",
    no_args_is_help=True,
)

# Register commands
app.command("gen")(gen.gen)
app.command("train")(train.train)
app.command("eval")(evaluate.evaluate)
app.command("inspect")(evaluate.inspect)
app.command("sweep")(sweep.sweep)


@app.command()
def version():
    """Show version information."""
    console.print(f"[bold blue]ShapeMoE[/bold blue] version {__version__}")


def run(argv: list[str] | None = None) -> None:
    """
    Entry point for the CLI.

    Exit codes: 0 success, 1 usage or configuration error, 2 data or format
    error, 3 numeric failure.
    """
    configure_logging()
    try:
        code = app(args=argv, standalone_mode=False)
    except click_exceptions.Abort:
        console.print("[red]Aborted[/red]")
        sys.exit(1)
    except click_exceptions.ClickException as e:
        e.show()
        sys.exit(1)
    sys.exit(code if isinstance(code, int) else 0)


if __name__ == "__main__":
    run()
