import logging
import sys
from typing import Union

from netkernel.globals import Config


class LoggerConfig:
    """Configuration class for logging setup."""

    DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    DEFAULT_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
    DEFAULT_LEVEL = Config.LOG_LEVEL


def _as_level(level: Union[int, str]) -> int:
    return logging.getLevelName(level.upper()) if isinstance(level, str) else level


def get_logger(name: str) -> logging.Logger:
    """
    Get or create a logger writing to stderr at NETKERNEL_LOG_LEVEL.

    Args:
        name: Name of the logger

    Returns:
        logging.Logger: Configured logger instance
    """
    logger = logging.getLogger(name)

    # Only configure if logger hasn't been configured yet
    if logger.handlers:
        return logger

    logger.setLevel(_as_level(LoggerConfig.DEFAULT_LEVEL))
    # stdout carries JSON summaries
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LoggerConfig.DEFAULT_FORMAT, LoggerConfig.DEFAULT_DATE_FORMAT))
    logger.addHandler(handler)
    return logger


def set_level(level: Union[int, str]) -> None:
    """Apply a level to every netkernel logger created so far."""
    level = _as_level(level)
    for name, candidate in logging.root.manager.loggerDict.items():
        if name.startswith("netkernel") and isinstance(candidate, logging.Logger):
            candidate.setLevel(level)
