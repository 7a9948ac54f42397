"""Utility functions shared by the certificate kernels and scripts.

This module provides logging setup, directory handling, duration
formatting, and the exact-rational helpers used when numbers are written
to reports.
"""

import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]


def setup_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """Setup logging configuration.

    Console output goes to standard error so that standard output can carry
    exactly one JSON report per invocation.

    Args:
        level: Logging level ("DEBUG", "INFO", "WARNING", "ERROR").
        log_file: Optional log file path. If None, logs to console only.

    Example:
        >>> setup_logging(level="DEBUG", log_file="qcw.log")
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    # Remove existing handlers to allow reconfiguration
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(numeric_level)
    root_logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        file_handler.setLevel(numeric_level)
        root_logger.addHandler(file_handler)


def ensure_directory_exists(directory_path: Union[str, Path]) -> None:
    """Ensure a directory exists, creating it if necessary.

    Args:
        directory_path: Path to directory.

    Example:
        >>> ensure_directory_exists("outputs/corpus")
    """
    path = Path(directory_path)
    path.mkdir(parents=True, exist_ok=True)
    logger.debug(f"Ensured directory exists: {directory_path}")


def format_duration(seconds: float) -> str:
    """Format duration in seconds to human-readable string.

    Args:
        seconds: Duration in seconds.

    Returns:
        Formatted string (e.g., "2m 30s" or "1h 5m 23s").

    Example:
        >>> format_duration(150)
        '2m 30s'
        >>> format_duration(3723)
        '1h 2m 3s'
    """
    hours = int(seconds // 3600)
    minutes = int((seconds % 3600) // 60)
    secs = int(seconds % 60)

    if hours > 0:
        return f"{hours}h {minutes}m {secs}s"
    elif minutes > 0:
        return f"{minutes}m {secs}s"
    else:
        return f"{secs}s"


def to_fraction(value: Any) -> Fraction:
    """Convert an int, float, string or Fraction to an exact Fraction.

    Floats are converted exactly (binary expansion), strings accept "p/q".

    Args:
        value: Number to convert.

    Returns:
        Exact rational value.

    Example:
        >>> to_fraction("5/6")
        Fraction(5, 6)
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(float(value))


def is_exact(value: Any) -> bool:
    """Return True when value is an int or Fraction (not a float)."""
    return isinstance(value, (int, Fraction, np.integer)) and not isinstance(value, bool)


def number_to_json(value: Number) -> Any:
    """Render a number for a JSON report.

    Fractions with denominator 1 become ints, other Fractions become
    ``{"exact": "p/q", "value": float}``; floats pass through.

    Example:
        >>> number_to_json(Fraction(5, 6))
        {'exact': '5/6', 'value': 0.8333333333333334}
    """
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return int(value.numerator)
        return {"exact": f"{value.numerator}/{value.denominator}", "value": float(value)}
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value
