"""Lateral velocity error laid out along the driven path."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

try:
    import matplotlib
    matplotlib.use("Agg")  # headless
    import matplotlib.pyplot as plt
    HAS_MATPLOTLIB = True
except ImportError:
    plt = None  # type: ignore
    HAS_MATPLOTLIB = False

from velocity_estimation.core.config import settings
from velocity_estimation.core.exceptions import LengthMismatchError
from velocity_estimation.utils.logging import get_logger

logger = get_logger(__name__)

TRACK_COLUMNS = ["x", "y", "vy_abs_error"]


def error_along_track(
    estimate_vy: Union[np.ndarray, pd.Series],
    ground_truth: pd.DataFrame,
    warmup: Optional[int] = None,
) -> pd.DataFrame:
    """
    |vy estimate − vy truth| at every position after the warm-up.

    Args:
        estimate_vy: Lateral velocity estimates, one per frame
        ground_truth: Table with ``x``, ``y`` and ``vy`` aligned with the estimates

    Raises:
        LengthMismatchError: If the series are not aligned
    """
    warmup = settings.WARMUP_FRAMES if warmup is None else warmup
    estimate_vy = np.asarray(estimate_vy, dtype=float)
    if len(estimate_vy) != len(ground_truth):
        raise LengthMismatchError(
            f"{len(estimate_vy)} estimates for {len(ground_truth)} ground-truth rows"
        )
    truth = ground_truth.iloc[warmup:]
    return pd.DataFrame({
        "x": truth["x"].to_numpy(dtype=float),
        "y": truth["y"].to_numpy(dtype=float),
        "vy_abs_error": np.abs(estimate_vy[warmup:] - truth["vy"].to_numpy(dtype=float)),
    }, columns=TRACK_COLUMNS)


def write_track_error(table: pd.DataFrame, path: Union[str, Path], plot: bool = True) -> Path:
    """Write the CSV and, when matplotlib is available, a PNG next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format="%.6f")
    if plot and HAS_MATPLOTLIB and not table.empty:
        fig, ax = plt.subplots(figsize=(7, 6))
        points = ax.scatter(table["x"], table["y"], c=table["vy_abs_error"], s=4, cmap="inferno")
        fig.colorbar(points, ax=ax, label="|vy error| [m/s]")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_aspect("equal", adjustable="datalim")
        fig.tight_layout()
        fig.savefig(path.with_suffix(".png"), dpi=120)
        plt.close(fig)
    logger.info(f"Track error written to {path}")
    return path
