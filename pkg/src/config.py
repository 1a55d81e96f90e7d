"""Environment-driven defaults for the command line application."""

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

DEFAULT_OUTPUT_DIR = "runs"
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_SAFETY_FACTOR = 1.2
DEFAULT_SETTLE_TIME = 10.0


@dataclass(frozen=True)
class Settings:
    """Process-wide defaults, overridable from the environment or a .env file."""

    output_dir: Path
    log_level: str
    safety_factor: float
    settle_time: float


def load_settings() -> Settings:
    """Load settings from the environment.

    Values in a local .env file are loaded first; variables already present
    in the environment win.

    Returns:
        Populated Settings instance
    """
    load_dotenv()
    return Settings(
        output_dir=Path(os.getenv("FORMATION_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)),
        log_level=os.getenv("FORMATION_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper(),
        safety_factor=float(os.getenv("FORMATION_SAFETY_FACTOR", DEFAULT_SAFETY_FACTOR)),
        settle_time=float(os.getenv("FORMATION_SETTLE_TIME", DEFAULT_SETTLE_TIME)),
    )
