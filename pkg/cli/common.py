"""Shared CLI plumbing: console, error-to-exit-code mapping and config files."""

from __future__ import annotations

import sys
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import typer
import yaml
from pydantic import ValidationError
from rich.console import Console

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from shapemoe.core.errors import ConfigError, DataFormatError, ShapeMoEError

console = Console()


@contextmanager
def handle_errors() -> Iterator[None]:
    """Print library errors in red and exit with their mapped code."""
    try:
        yield
    except ShapeMoEError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(e.exit_code) from e
    except ValidationError as e:
        console.print(f"[red]Error:[/red] invalid configuration: {e}")
        raise typer.Exit(ConfigError.exit_code) from e
    except OSError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(DataFormatError.exit_code) from e


def load_config_file(path: Path) -> dict[str, Any]:
    """Parse a TOML or YAML config file into a dict."""
    suffix = path.suffix.lower()
    try:
        if suffix == ".toml":
            with path.open("rb") as f:
                data = tomllib.load(f)
        elif suffix in (".yaml", ".yml"):
            data = yaml.safe_load(path.read_text()) or {}
        else:
            raise ConfigError(f"unsupported config file type {suffix!r} (use .toml, .yaml or .yml)")
    except (OSError, tomllib.TOMLDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return data


def _flag_value(value: Any) -> Any:
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    return value


def command_defaults(data: dict[str, Any], command: str) -> dict[str, Any]:
    """Top-level scalar keys, overridden by the command's own table; dashes become underscores."""
    merged = {k: v for k, v in data.items() if not isinstance(v, dict)}
    section = data.get(command, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section [{command}] must be a table")
    merged.update(section)
    return {key.replace("-", "_"): _flag_value(value) for key, value in merged.items()}


def config_option(command: str) -> Any:
    """
    An eager `--config` option that installs file values as flag defaults.

    Explicit flags still win because defaults only apply to unset parameters.
    """

    def _callback(ctx: typer.Context, value: Path | None) -> Path | None:
        if value is None:
            return value
        try:
            defaults = command_defaults(load_config_file(value), command)
        except ConfigError as e:
            console.print(f"[red]Error:[/red] {e}")
            raise typer.Exit(ConfigError.exit_code) from e
        ctx.default_map = {**(ctx.default_map or {}), **defaults}
        return value

    return typer.Option(
        None,
        "--config",
        help="TOML or YAML file of flag values; explicit flags override it",
        is_eager=True,
        callback=_callback,
    )


def parse_list(raw: str, convert: Callable[[str], Any], label: str) -> list[Any]:
    """Split a comma-separated flag value."""
    try:
        items = [convert(part.strip()) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"invalid {label} list {raw!r}: {e}") from e
    if not items:
        raise ConfigError(f"{label} list is empty")
    return items
