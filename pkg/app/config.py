"""
Configuration module for the spectral toolkit.

Settings are layered: defaults, then QUASIROOTS_* environment variables
(a .env file is loaded into the environment first), then a key=value config
file, then explicit overrides such as command-line flags.
"""

import os
import logging
from typing import Any, Dict, Optional

from dotenv import load_dotenv, dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .exceptions import UsageError

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

ENV_PREFIX = "QUASIROOTS_"


class Settings(BaseModel):
    """Effective numerical settings, echoed into every report."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    newton_tol: float = Field(1e-9, gt=0, description="Relative residual accepted for a refined root")
    boundary_samples: int = Field(64, ge=64, description="Minimum contour samples before adaptive doubling")
    guard_eps: float = Field(1e-8, gt=0, description="Relative guard band for |F| on a contour")
    max_depth: int = Field(40, ge=1, description="Subdivision depth cap")
    perturbation_budget: int = Field(8, ge=0, description="Contour dilations tried when a zero is too close")
    rouche_samples: int = Field(4096, ge=256, description="Samples on the Rouche circle")
    window_fraction: float = Field(0.75, gt=0, le=1, description="Trailing span used by the growth fit")
    workers: int = Field(1, ge=1, description="Threads used for mode sweeps")
    log_level: str = Field("INFO", description="Logging level name")


def _from_environment() -> Dict[str, Any]:
    values = {}
    for name in Settings.model_fields:
        raw = os.getenv(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = raw
    return values


def _from_file(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise UsageError(f"Config file not found: {path}")
    values = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            continue
        key = key.strip().lower()
        if key.startswith(ENV_PREFIX.lower()):
            key = key[len(ENV_PREFIX):]
        values[key] = value.strip()
    return values


def load_settings(config_file: Optional[str] = None, **overrides: Any) -> Settings:
    """
    Build the effective settings.

    Args:
        config_file: Optional path to a key=value file
        **overrides: Explicit values (None entries are ignored)

    Returns:
        The validated Settings

    Raises:
        UsageError: On unknown keys or values that fail validation
    """
    values = _from_environment()
    if config_file:
        values.update(_from_file(config_file))
    values.update({key: value for key, value in overrides.items() if value is not None})

    try:
        settings = Settings(**values)
    except ValidationError as e:
        raise UsageError(f"Invalid settings: {e}")

    logger.debug(f"Effective settings: {settings.model_dump()}")
    return settings
