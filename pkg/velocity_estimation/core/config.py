"""Configuration management for the velocity estimation toolkit.

Application-wide settings come from the environment (and an optional
``.env`` file). Component configurations (vehicle, sensors, filter,
training, evaluation) are pydantic models that can be loaded from and
written to plain-text key=value files.
"""
from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Dict, Literal, Type, TypeVar, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()

ModelT = TypeVar("ModelT", bound=BaseModel)


class Settings(BaseSettings):
    """
    Application-wide settings and configuration with validation.

    Every field can be overridden with an environment variable of the same
    name, e.g. ``LOG_LEVEL=DEBUG``.
    """

    # Base paths
    BASE_DIR: Path = Path(__file__).parent.parent.parent.absolute()
    DATA_DIR: Path = BASE_DIR / "data"
    LOGS_DIR: Path = BASE_DIR / "logs"
    OUTPUT_DIR: Path = BASE_DIR / "outputs"

    # File paths
    LOG_FILE: str = str(LOGS_DIR / "velocity_estimation.log")

    # Timing
    FRAME_RATE_HZ: float = Field(default=200.0, gt=0.0, description="Synchronized frame rate")
    WARMUP_FRAMES: int = Field(default=200, ge=0, description="Frames excluded while hidden states settle")

    # Reproducibility / parallelism
    DEFAULT_SEED: int = Field(default=0, ge=0, description="Seed used when none is given")
    MAX_WORKERS: int = Field(default=1, ge=1, le=64, description="Worker processes for scenario suites")

    # Logging
    LOG_LEVEL: str = Field(default="INFO", description="Logging level")
    ENABLE_DEBUG: bool = Field(default=False, description="Enable debug mode")
    LOG_FORMAT: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Log format string"
    )

    model_config = SettingsConfigDict(
        case_sensitive=True,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def validate_log_level(cls, v):
        """Validate log level."""
        valid = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if isinstance(v, str) and v.upper() in valid:
            return v.upper()
        return "INFO"

    @property
    def frame_dt(self) -> float:
        """Period of the synchronized frame grid in seconds."""
        return 1.0 / self.FRAME_RATE_HZ


def _coerce_value(raw: str) -> Any:
    """Turn a comma separated value into a list, leave scalars as strings."""
    if "," in raw:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw.strip()


def load_key_value_config(path: Union[str, Path], model: Type[ModelT]) -> ModelT:
    """
    Load a plain-text key=value file into a validated pydantic model.

    Args:
        path: Path to the key=value file (``#`` comments allowed)
        model: Pydantic model class to validate against

    Returns:
        Instance of ``model``

    Raises:
        FileNotFoundError: If the file does not exist
        pydantic.ValidationError: If a value is invalid or a key is unknown
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")

    values = dotenv_values(path)
    parsed: Dict[str, Any] = {
        key.strip(): _coerce_value(value)
        for key, value in values.items()
        if value is not None and value.strip() != ""
    }
    logger.debug(f"Loaded {len(parsed)} keys from {path.name} for {model.__name__}")
    return model.model_validate(parsed)


def dump_key_value_config(config: BaseModel, path: Union[str, Path]) -> Path:
    """Write a pydantic model as key=value lines (nested configs flattened)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = config.to_key_values() if hasattr(config, "to_key_values") else config.model_dump()
    lines = []
    for key, value in values.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in _flatten(value))
        lines.append(f"{key}={value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _flatten(values: Any) -> list:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            out.extend(_flatten(v))
        else:
            out.append(v)
    return out


EstimatorMode = Literal["reference", "baseline"]


# Instantiate the settings
settings = Settings()

# Create necessary directories if they don't exist
for dir_path in [settings.LOGS_DIR, settings.OUTPUT_DIR]:
    os.makedirs(dir_path, exist_ok=True)

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
    format=settings.LOG_FORMAT,
    handlers=[
        logging.FileHandler(settings.LOG_FILE, encoding="utf-8"),
        logging.StreamHandler(),
    ],
)

logger = logging.getLogger(__name__)
logger.debug(f"Configuration loaded, frame rate {settings.FRAME_RATE_HZ} Hz")
