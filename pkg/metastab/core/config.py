import os
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


_REPO_DIR = Path(__file__).resolve().parents[2]
_ENV_FILE = _REPO_DIR / ".env"


class Settings(BaseSettings):
    # Seed used by stochastic commands when --seed is not given.
    default_seed: int = 20240917
    # Worker count for replications and per-k fan-out. 0 means "all cores".
    threads: int = 0

    # Exact min-cut enumeration refuses beyond this many subsets.
    enumeration_cap: int = 10_000_000
    # Samples drawn when a caller falls back from enumeration to sampling.
    sample_fallback: int = 20_000

    # Contact simulator bookkeeping audit (only when debug is on).
    debug: bool = False
    audit_interval: int = 65536

    # Seed-grid size per axis for the Psi optimizer.
    psi_grid: int = 64

    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        # Resolve to the repo .env so tools can be run from anywhere
        env_file=str(_ENV_FILE),
        env_file_encoding="utf-8",
        env_prefix="METASTAB_",
        extra="ignore",
    )

    def resolved_threads(self) -> int:
        if self.threads and self.threads > 0:
            return self.threads
        return os.cpu_count() or 1


def get_settings() -> Settings:
    return Settings()
