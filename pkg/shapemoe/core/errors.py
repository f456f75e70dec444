"""
Exception hierarchy for ShapeMoE.

Every error carries the process exit code the CLI maps it to:
1 for configuration/usage problems, 2 for data or file-format problems,
3 for numeric failures.
"""


class ShapeMoEError(Exception):
    """Base class for all ShapeMoE errors."""

    exit_code: int = 1


class ConfigError(ShapeMoEError):
    """Raised when a configuration value or combination is invalid."""

    exit_code = 1


class ConfigMismatchError(ConfigError):
    """Raised when a checkpoint, dataset and model configuration disagree."""


class DimensionError(ShapeMoEError):
    """Raised when tensor or mask shapes are incompatible."""

    exit_code = 1


class DataFormatError(ShapeMoEError):
    """Base class for dataset, checkpoint and generation failures."""

    exit_code = 2


class DatasetFormatError(DataFormatError):
    """Raised when a dataset file is malformed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class CheckpointFormatError(DataFormatError):
    """Raised when a checkpoint file is malformed."""

    def __init__(self, message: str, offset: int | None = None):
        suffix = f" (at byte offset {offset})" if offset is not None else ""
        super().__init__(f"{message}{suffix}")
        self.offset = offset


class GenerationError(DataFormatError):
    """Raised when a scene cannot be generated within the rejection budget."""

    def __init__(self, index: int, attempts: int):
        super().__init__(
            f"scene {index}: visible-fraction constraint not met after {attempts} attempts"
        )
        self.index = index
        self.attempts = attempts


class NumericError(ShapeMoEError):
    """Raised when NaN or Inf values appear where finite values are required."""

    exit_code = 3

    def __init__(self, message: str, block: str | None = None, step: int | None = None):
        super().__init__(message)
        self.block = block
        self.step = step


class DegenerateDistributionError(NumericError):
    """Raised when a softmax row has no finite entry."""
