"""
Logging setup for ShapeMoE.

Log lines are either human-readable or one JSON object per record. Training
and sweep code attach run context (epoch, step, run name, ...) through the
standard `extra=` mechanism; the JSON format emits those keys as top-level
fields so epoch logs can be filtered without parsing the message text.
"""

import json
import logging
import sys

from shapemoe.core.config import get_settings

# Keys present on every LogRecord; anything else came in through `extra=`.
_RECORD_ATTRS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", None, None))) | {"message", "asctime"}

PLAIN_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def context_fields(record: logging.LogRecord) -> dict[str, object]:
    """Return the caller-supplied `extra=` fields of a record, sorted by key."""
    return {k: v for k, v in sorted(vars(record).items()) if k not in _RECORD_ATTRS}


class JsonFormatter(logging.Formatter):
    """One JSON object per record, with run context merged in."""

    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, object] = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key, value in context_fields(record).items():
            payload.setdefault(key, value)
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str)


def configure_logging(level: str | None = None, json_format: bool | None = None) -> None:
    """
    Install the single stdout handler on the root logger.

    Args:
        level: Log level name; defaults to `Settings.log_level`.
        json_format: Emit JSON lines; defaults to `Settings.json_logs`.
    """
    settings = get_settings()
    log_level = (level or settings.log_level).upper()
    use_json = settings.json_logs if json_format is None else json_format

    root = logging.getLogger()
    root.setLevel(log_level)
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(log_level)
    if use_json:
        handler.setFormatter(JsonFormatter(datefmt="%Y-%m-%dT%H:%M:%S"))
    else:
        handler.setFormatter(logging.Formatter(PLAIN_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    root.addHandler(handler)


def get_logger(name: str) -> logging.Logger:
    """Return the named logger (pass `__name__`)."""
    return logging.getLogger(name)
