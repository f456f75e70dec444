"""
Tests for configuration management.
"""

import pytest
from pydantic import ValidationError

from shapemoe.core.config import Settings, get_settings


class TestSettings:
    """Test suite for Settings class."""

    def test_default_values(self, monkeypatch):
        """Test that settings have correct default values."""
        for var in ("SHAPEMOE_APP_NAME", "SHAPEMOE_LOG_LEVEL", "SHAPEMOE_JSON_LOGS"):
            monkeypatch.delenv(var, raising=False)
        settings = Settings(_env_file=None)

        assert settings.app_name == "ShapeMoE"
        assert settings.log_level == "INFO"
        assert settings.json_logs is False
        assert settings.eval_batch_size == 64
        assert settings.sweep_workers == 1

    def test_custom_values(self):
        """Test that settings can be overridden."""
        settings = Settings(app_name="Test App", log_level="DEBUG", eval_batch_size=8, sweep_workers=3)

        assert settings.app_name == "Test App"
        assert settings.log_level == "DEBUG"
        assert settings.eval_batch_size == 8
        assert settings.sweep_workers == 3

    def test_environment_variables(self, monkeypatch):
        """Test that settings load from prefixed environment variables."""
        monkeypatch.setenv("SHAPEMOE_LOG_LEVEL", "ERROR")
        monkeypatch.setenv("SHAPEMOE_EVAL_BATCH_SIZE", "32")
        monkeypatch.setenv("SHAPEMOE_JSON_LOGS", "true")

        settings = Settings()

        assert settings.log_level == "ERROR"
        assert settings.eval_batch_size == 32
        assert settings.json_logs is True

    def test_unprefixed_variables_ignored(self, monkeypatch):
        """Test that variables without the prefix do not leak in."""
        monkeypatch.delenv("SHAPEMOE_LOG_LEVEL", raising=False)
        monkeypatch.setenv("LOG_LEVEL", "CRITICAL")

        settings = Settings(_env_file=None)

        assert settings.log_level == "INFO"


class TestGetSettings:
    """Test suite for get_settings function."""

    def test_singleton_behavior(self):
        """Test that get_settings returns the same instance."""
        get_settings.cache_clear()

        assert get_settings() is get_settings()


class TestValidation:
    """Test suite for settings validation."""

    def test_log_level_normalized(self):
        """Test that a lowercase log level is upper-cased."""
        assert Settings(log_level="debug").log_level == "DEBUG"

    def test_unknown_log_level_rejected(self):
        """Test that an unknown log level fails validation."""
        with pytest.raises(ValidationError, match="log_level"):
            Settings(log_level="LOUD")

    def test_unknown_env_rejected(self):
        """Test that env is restricted to dev, test and prod."""
        with pytest.raises(ValidationError):
            Settings(env="staging")

    def test_batch_size_positive(self):
        """Test that a zero evaluation batch size is rejected."""
        with pytest.raises(ValidationError):
            Settings(eval_batch_size=0)
