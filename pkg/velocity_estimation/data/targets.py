"""Reference target generation: reference-mode filter plus zero-phase smoothing."""
from __future__ import annotations

from typing import Optional

import numpy as np
import pandas as pd

from velocity_estimation.core.config import settings
from velocity_estimation.core.exceptions import MissingChannelError
from velocity_estimation.data.frames import TARGET_COLUMNS, FrameInput, as_frame_table, has_external_velocity
from velocity_estimation.filters.io import estimates_to_frame
from velocity_estimation.filters.mkf import run_filter
from velocity_estimation.filters.state import MkfConfig
from velocity_estimation.sim.params import VehicleParams
from velocity_estimation.utils.logging import get_logger

logger = get_logger(__name__)

DEFAULT_SIGMA = 0.05
TRUNCATE = 3.0


def gaussian_kernel(sigma: float, dt: float, truncate: float = TRUNCATE) -> np.ndarray:
    """Normalized Gaussian weights at offsets −k·dt..k·dt, k = ceil(truncate·sigma/dt)."""
    if sigma <= 0.0 or dt <= 0.0:
        raise ValueError(f"sigma and dt must be positive (sigma={sigma}, dt={dt})")
    half = int(np.ceil(truncate * sigma / dt - 1e-9))
    offsets = np.arange(-half, half + 1) * dt
    weights = np.exp(-0.5 * (offsets / sigma) ** 2)
    return weights / weights.sum()


def gaussian_smooth(values: np.ndarray, sigma: float, dt: float, truncate: float = TRUNCATE) -> np.ndarray:
    """
    Non-causal Gaussian moving average along axis 0.

    Near the ends the truncated kernel is renormalized over the samples that
    exist, so constants are preserved and no padding is introduced.
    """
    values = np.asarray(values, dtype=float)
    kernel = gaussian_kernel(sigma, dt, truncate)
    half = len(kernel) // 2
    n = values.shape[0]

    def conv(column: np.ndarray) -> np.ndarray:
        return np.convolve(column, kernel, mode="full")[half:half + n]

    norm = conv(np.ones(n))
    if values.ndim == 1:
        return conv(values) / norm
    return np.column_stack([conv(values[:, j]) / norm for j in range(values.shape[1])])


def generate_target(
    frames: FrameInput,
    config: Optional[MkfConfig] = None,
    sigma: float = DEFAULT_SIGMA,
    params: Optional[VehicleParams] = None,
) -> pd.DataFrame:
    """
    Smoothed reference-mode filter output aligned with ``frames``.

    Returns:
        Table with columns ``t`` and ``vx, vy, yawrate, ax, ay``

    Raises:
        MissingChannelError: If the frames lack external velocity channels
    """
    table = as_frame_table(frames)
    if not has_external_velocity(table):
        raise MissingChannelError("Target generation needs ext_vx/ext_vy channels")
    config = (config or MkfConfig()).model_copy(update={"mode": "reference"})
    states = run_filter(table, "reference", config, params)
    estimates = estimates_to_frame(states, with_covariance=False)

    smoothed = gaussian_smooth(estimates[TARGET_COLUMNS].to_numpy(), sigma, settings.frame_dt)
    targets = pd.DataFrame(smoothed, columns=TARGET_COLUMNS)
    targets.insert(0, "t", table["t"].to_numpy())
    logger.info(f"Generated {len(targets)} targets (sigma {sigma}s)")
    return targets
