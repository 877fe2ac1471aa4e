"""Logging configuration for the stochmatch workbench."""

import logging
from datetime import datetime
from pathlib import Path
from typing import Iterable

from platformdirs import user_cache_dir


class PlainFormatter(logging.Formatter):
    """Formatter that shows only the message."""

    def format(self, record):
        return record.getMessage()


def log_run_header(lines: Iterable[str]) -> None:
    """Echo a report's reproducibility header using a temporary handler."""
    header_logger = logging.getLogger("stochmatch.header")
    header_logger.setLevel(logging.INFO)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(PlainFormatter())

    header_logger.addHandler(console_handler)
    header_logger.propagate = False

    try:
        for line in lines:
            header_logger.info(line)
    finally:
        header_logger.removeHandler(console_handler)


def setup_logging(log_level: str = "INFO", log_to_file: bool = True) -> None:
    """Configure logging to output to the console and, optionally, a file.

    Args:
        log_level: The logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_to_file: Also write DEBUG-level records to a timestamped file
    """
    level = getattr(logging, log_level.upper())

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG if log_to_file else level)
    root_logger.handlers.clear()

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    # Console handler (stderr, so CSV on stdout stays clean)
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if not log_to_file:
        return

    cache_dir = get_log_dir()
    cache_dir.mkdir(parents=True, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = cache_dir / f"{timestamp}.log"

    file_handler = logging.FileHandler(log_file, encoding="utf-8", delay=True)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    root_logger.addHandler(file_handler)

    logging.getLogger(__name__).debug(f"Logging initialized - Console: {log_level}, File: {log_file}")


def get_log_dir() -> Path:
    """Get the directory where log files are stored.

    Returns:
        Path to the log directory
    """
    return Path(user_cache_dir("stochmatch"))
