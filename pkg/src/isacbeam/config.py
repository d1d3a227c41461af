"""Runtime configuration loaded from .env, env vars, or programmatic input."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

VERSION = "0.1.0"

LOG_LEVELS: dict[str, int] = {
    "error": logging.ERROR,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _parse_int(raw: str | None) -> int | None:
    """Parse an optional integer, returning None for blanks and garbage."""
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw)
    except ValueError:
        return None


@dataclass
class Config:
    """Process-level settings. Can be built from env, CLI args, or programmatic input."""

    log_level: str = "info"
    out_dir: Path | None = None
    threads: int = 1
    seed: int | None = None

    @classmethod
    def from_env(cls) -> Config:
        """Load config from environment variables and .env file."""
        load_dotenv()
        out = os.getenv("ISACBEAM_OUT", "")
        return cls(
            log_level=os.getenv("ISACBEAM_LOG", "info").strip().lower(),
            out_dir=Path(out) if out else None,
            threads=_parse_int(os.getenv("ISACBEAM_THREADS")) or 1,
        )

    @classmethod
    def from_args(
        cls,
        out: str | None = None,
        threads: int | None = None,
        seed: int | None = None,
    ) -> Config:
        """Build config from explicit arguments, falling back to env."""
        env = cls.from_env()
        return cls(
            log_level=env.log_level,
            out_dir=Path(out) if out else env.out_dir,
            threads=threads if threads is not None else env.threads,
            seed=seed,
        )

    def validate(self) -> list[str]:
        """Return list of validation errors, empty if config is valid."""
        errors = []
        if self.log_level not in LOG_LEVELS:
            errors.append(
                f"ISACBEAM_LOG={self.log_level!r} is not one of "
                f"{', '.join(sorted(LOG_LEVELS))}."
            )
        if self.threads < 1:
            errors.append("--threads / ISACBEAM_THREADS must be at least 1.")
        return errors

    @property
    def logging_level(self) -> int:
        """Numeric logging level, INFO when the name is unknown."""
        return LOG_LEVELS.get(self.log_level, logging.INFO)
