"""
Central configuration loaded from the environment and .env
"""
import logging
from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings; experiment parameters live in ExperimentConfig."""

    model_config = SettingsConfigDict(
        env_prefix="WAKESAR_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    output_dir: Path = Path("./runs")
    log_level: str = "INFO"
    log_format: str = "[%(name)s] %(levelname)s %(message)s"
    api_host: str = "127.0.0.1"
    api_port: int = 8000
    # Benchmark cells evaluated concurrently; results are merged in a fixed order.
    workers: int = 1
    default_scale: Literal["desk", "paper"] = "desk"
    # Runs the HTTP API keeps in memory; the least recently used is dropped first.
    max_runs: int = Field(32, ge=1)


settings = Settings()

_configured = False


def configure_logging(level: str | None = None) -> None:
    """Install the root handler once; later calls only adjust the level."""
    global _configured
    resolved = (level or settings.log_level).upper()
    if not _configured:
        logging.basicConfig(level=resolved, format=settings.log_format)
        _configured = True
    logging.getLogger("wakesar").setLevel(resolved)
