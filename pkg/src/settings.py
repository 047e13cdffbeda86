"""
Environment-driven configuration for the simulator.

Values come from the process environment, optionally seeded from a `.env`
file in the working directory.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

try:
    from .validators import ValidationError
except ImportError:
    from validators import ValidationError

__version__ = "1.0.0"

PROJECT_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_BLOCK_SIZE = 65536

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Settings:
    """Resolved runtime settings."""
    output_dir: Path
    log_level: str = "WARNING"
    workers: int = 1
    block_size: int = DEFAULT_BLOCK_SIZE


def _positive_int(name: str, raw: Optional[str], default: int) -> int:
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"{name} must be an integer, got {raw!r}.")
    if value < 1:
        raise ValidationError(f"{name} must be at least 1, got {value}.")
    return value


def load_settings(dotenv_path: Optional[str] = None) -> Settings:
    """
    Load settings from the environment.

    Args:
        dotenv_path: Optional explicit `.env` file; existing variables win

    Returns:
        Settings instance

    Raises:
        ValidationError: If a variable holds an unusable value
    """
    load_dotenv(dotenv_path=dotenv_path, override=False)

    output_dir = Path(os.getenv("KDSIM_OUTPUT_DIR") or PROJECT_ROOT / "output")

    log_level = (os.getenv("KDSIM_LOG_LEVEL") or "WARNING").upper()
    if not isinstance(logging.getLevelName(log_level), int):
        raise ValidationError(f"KDSIM_LOG_LEVEL must be a logging level name, got {log_level!r}.")

    workers = _positive_int("KDSIM_WORKERS", os.getenv("KDSIM_WORKERS"), 1)
    block_size = _positive_int("KDSIM_BLOCK_SIZE", os.getenv("KDSIM_BLOCK_SIZE"), DEFAULT_BLOCK_SIZE)

    settings = Settings(output_dir=output_dir, log_level=log_level, workers=workers, block_size=block_size)
    logger.debug(f"Loaded settings: {settings}")
    return settings
