"""Environment configuration."""

from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class MarpSettings(BaseSettings):
    """Settings read from MARP_* environment variables."""

    model_config = SettingsConfigDict(env_prefix="MARP_", extra="ignore")

    seed: Optional[int] = None
    log_level: str = "INFO"
    data_dir: Path = Path("data")
    default_gap_tol: float = Field(1e-10, gt=0)
    default_max_iter: int = Field(100_000, ge=1)
    sweep_workers: int = Field(4, ge=1)
    sample_count: int = Field(20_000, ge=1)


@lru_cache
def get_settings() -> MarpSettings:
    return MarpSettings()
