"""
Process-wide settings for ShapeMoE.

Only runtime knobs that are not part of an experiment live here: logging,
evaluation batching and sweep parallelism. Anything that changes results
(architecture, training, generation) is an explicit config model in the
package that consumes it, so checkpoints and manifests can echo it.
"""

from functools import lru_cache
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseSettings):
    """Runtime settings read from `SHAPEMOE_*` environment variables and `.env`."""

    model_config = SettingsConfigDict(
        env_prefix="SHAPEMOE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    env: Literal["dev", "test", "prod"] = "dev"
    app_name: str = "ShapeMoE"

    log_level: str = Field(default="INFO", description="Root log level")
    json_logs: bool = Field(default=False, description="One JSON object per log line")

    eval_batch_size: int = Field(default=64, ge=1, description="Scenes per no-grad forward pass")
    sweep_workers: int = Field(default=1, ge=1, description="Worker processes for `shapemoe sweep`")

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"log_level must be one of {', '.join(LOG_LEVELS)}, got {value!r}")
        return level


@lru_cache
def get_settings() -> Settings:
    """Return the cached settings instance."""
    return Settings()
