"""Logging setup built on rich"""

import logging
import os
from typing import Optional, Union

from dotenv import load_dotenv
from rich.logging import RichHandler

PACKAGE_LOGGER = "fair_pprl"


def resolve_level(level: Optional[Union[str, int]] = None) -> int:
    """
    Resolve a log level from an explicit value or the environment.

    Lookup order: argument, FAIR_PPRL_LOG_LEVEL, LOG_LEVEL, then INFO.
    A .env file in the working directory is loaded first.
    """
    if level is None:
        load_dotenv()
        level = os.getenv("FAIR_PPRL_LOG_LEVEL") or os.getenv("LOG_LEVEL") or "INFO"
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(str(level).upper())
    return resolved if isinstance(resolved, int) else logging.INFO


def setup_logging(level: Optional[Union[str, int]] = None) -> logging.Logger:
    """
    Attach a RichHandler to the package logger.

    Args:
        level: Log level name or number (see resolve_level)

    Returns:
        The configured package logger
    """
    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(resolve_level(level))
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(rich_tracebacks=True, show_path=False, markup=False)
        handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
        logger.addHandler(handler)
    logger.propagate = False
    return logger


def get_logger(name: str) -> logging.Logger:
    """Return a child logger of the package logger"""
    if not name.startswith(PACKAGE_LOGGER):
        name = f"{PACKAGE_LOGGER}.{name}"
    return logging.getLogger(name)
