import json
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from netkernel.core.errors import ConfigError
from netkernel.core.utils.logging import get_logger
from netkernel.globals import DEFAULT_DIRS

logger = get_logger(__name__)


load_dotenv()


class RuntimeSettings(BaseModel):
    """Process-wide runtime settings."""

    threads: Optional[int] = Field(default=None, ge=1)
    log_level: str = Field(default="INFO")
    chunk_trajectories: int = Field(default=32, ge=1)
    feature_cache_mb: float = Field(default=256.0, ge=0)
    output_dir: str = Field(default=str(DEFAULT_DIRS.OUTPUT_DIR))

    @field_validator("log_level")
    @classmethod
    def _check_level(cls, value: str) -> str:
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Invalid log level '{value}'")
        return value

    model_config = {"extra": "forbid"}


class ConfigManager:
    APP_NAME = "netkernel"
    CONFIG_FILE = Path(os.getenv("NETKERNEL_SETTINGS_FILE", str(DEFAULT_DIRS.DATA_DIR / "settings.json")))

    def __init__(self, config_file: Optional[Path] = None):
        if config_file is not None:
            self.CONFIG_FILE = Path(config_file)
        logger.debug(f"Initializing ConfigManager. Settings file: {self.CONFIG_FILE}")
        self.config = self._load_config()

    def _load_config(self) -> RuntimeSettings:
        config_dict = self._get_default_config()
        if self.CONFIG_FILE.exists():
            self._update_from_file(config_dict)
        try:
            return RuntimeSettings(**config_dict)
        except ValidationError as e:
            raise ConfigError(f"Invalid runtime settings: {e}") from e

    def _get_default_config(self) -> dict:
        threads = os.getenv("NETKERNEL_THREADS")
        return {
            "threads": int(threads) if threads else None,
            "log_level": os.getenv("NETKERNEL_LOG_LEVEL", "INFO"),
            "chunk_trajectories": int(os.getenv("NETKERNEL_CHUNK_TRAJECTORIES", "32")),
            "feature_cache_mb": float(os.getenv("NETKERNEL_FEATURE_CACHE_MB", "256")),
            "output_dir": os.getenv("NETKERNEL_OUTPUT_DIR", str(DEFAULT_DIRS.OUTPUT_DIR)),
        }

    def save_config(self):
        self.CONFIG_FILE.parent.mkdir(parents=True, exist_ok=True)
        config_dict = self.config.model_dump(exclude_none=True)
        with open(self.CONFIG_FILE, "w") as f:
            json.dump(config_dict, f, indent=2, default=str)

    def update_config(self, **kwargs):
        config_dict = self.config.model_dump()
        config_dict.update(kwargs)
        try:
            self.config = RuntimeSettings(**config_dict)
        except ValidationError as e:
            raise ConfigError(f"Invalid runtime settings: {e}") from e
        self.save_config()

    def _update_from_file(self, config_dict: dict) -> None:
        try:
            with open(self.CONFIG_FILE) as f:
                file_config = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Settings file {self.CONFIG_FILE} is not valid JSON: {e}") from e
        config_dict.update(file_config)
