"""Runtime settings loaded from the environment."""

from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """amabench settings (env prefix ``AMABENCH_``)."""

    model_config = SettingsConfigDict(env_prefix="AMABENCH_", env_file=".env", extra="ignore")

    cache_dir: Optional[Path] = None  # None: next to the instance file
    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"
    inner_tol: float = Field(default=1e-10, gt=0)
    step_fraction: float = Field(default=0.99, gt=0, lt=1)
    reference_multiplier: int = Field(default=50, ge=1)
    reference_tol: float = Field(default=1e-13, ge=0)


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get or create the settings instance."""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment."""
    global _settings
    _settings = None
