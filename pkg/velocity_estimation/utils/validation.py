"""Input validation utilities for the velocity estimation toolkit.

Validators return ``(is_valid, error_message)`` so callers decide which
error type to raise.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from velocity_estimation.utils.logging import get_logger

logger = get_logger(__name__)


def validate_timestamps(times: np.ndarray, name: str = "channel") -> Tuple[bool, Optional[str]]:
    """
    Validate a timestamp column.

    Returns:
        (is_valid, error_message)
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return False, f"{name} has no samples"

    if not np.all(np.isfinite(times)):
        return False, f"{name} has non-finite timestamps"

    if times.size > 1 and np.any(np.diff(times) <= 0.0):
        return False, f"{name} timestamps are not strictly increasing"

    return True, None


def validate_columns(
    table: pd.DataFrame, required: Iterable[str], name: str = "table"
) -> Tuple[bool, Optional[str]]:
    """
    Check that every required column is present.

    Returns:
        (is_valid, error_message)
    """
    missing = [col for col in required if col not in table.columns]
    if missing:
        return False, f"{name} is missing columns: {missing}"
    return True, None


def validate_finite(values: np.ndarray, name: str = "values") -> Tuple[bool, Optional[str]]:
    """Check an array for NaN/inf entries."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        bad = int(np.size(values) - np.count_nonzero(np.isfinite(values)))
        return False, f"{name} has {bad} non-finite entries"
    return True, None


def validate_aligned(
    first: Sequence, second: Sequence, name: str = "series"
) -> Tuple[bool, Optional[str]]:
    """Check two series have the same length."""
    if len(first) != len(second):
        return False, f"{name} lengths differ: {len(first)} vs {len(second)}"
    return True, None


def validate_same_timestamps(
    first: np.ndarray, second: np.ndarray, tolerance: float = 1e-9
) -> Tuple[bool, Optional[str]]:
    """Check two timestamp columns describe the same grid."""
    is_valid, error = validate_aligned(first, second, name="timestamps")
    if not is_valid:
        return is_valid, error

    if len(first) and np.max(np.abs(np.asarray(first) - np.asarray(second))) > tolerance:
        return False, "timestamps are not aligned"
    return True, None
