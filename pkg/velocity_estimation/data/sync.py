"""Zero-order-hold resampling of multi-rate streams onto the frame grid."""
from __future__ import annotations

from typing import Optional

import numpy as np
import pandas as pd

from velocity_estimation.core.config import settings
from velocity_estimation.core.exceptions import LeadingGapError, MissingChannelError
from velocity_estimation.data.frames import WHEEL_TORQUE_COLUMNS, frame_columns
from velocity_estimation.sim.sensors import RawSensorStream
from velocity_estimation.utils.logging import get_logger
from velocity_estimation.utils.validation import validate_timestamps

logger = get_logger(__name__)

TIME_TOLERANCE = 1e-9
REQUIRED_GROUPS = ("imu1", "imu2", "steering", "wheels", "torques")


def tick_grid(t_end: float, rate: float) -> np.ndarray:
    """Ticks k/rate from 0 through ``t_end``."""
    count = int(np.floor(t_end * rate + TIME_TOLERANCE)) + 1
    return np.arange(count) / rate


def hold_indices(times: np.ndarray, ticks: np.ndarray, name: str = "channel") -> np.ndarray:
    """
    Index of the most recent native sample at each tick.

    Raises:
        LeadingGapError: If the first tick precedes the first sample
    """
    idx = np.searchsorted(times, ticks + TIME_TOLERANCE, side="right") - 1
    if idx.size and idx[0] < 0:
        raise LeadingGapError(
            f"{name} starts at t={times[0]:.6f}s, after the first tick t={ticks[0]:.6f}s"
        )
    return idx


def zoh_resample(times: np.ndarray, values: np.ndarray, ticks: np.ndarray, name: str = "channel") -> np.ndarray:
    """Hold each native sample until the next one arrives; no interpolation."""
    times = np.asarray(times, dtype=float)
    is_valid, error = validate_timestamps(times, name=name)
    if not is_valid:
        raise ValueError(error)
    return np.asarray(values)[hold_indices(times, ticks, name)]


def zero_order_hold_sync(raw: RawSensorStream, rate: Optional[float] = None) -> pd.DataFrame:
    """
    Synchronize every sensor group onto a common grid.

    Args:
        raw: Multi-rate stream (external velocity group optional)
        rate: Output rate in Hz, defaults to ``settings.FRAME_RATE_HZ``

    Returns:
        Frame table with columns ``frame_columns(with_ext)``; axle torques
        ``tq_f``/``tq_r`` are the per-axle sums of the wheel torques

    Raises:
        MissingChannelError: If a required group is absent
        LeadingGapError: If a group starts after t=0
    """
    rate = rate or settings.FRAME_RATE_HZ
    for group in REQUIRED_GROUPS:
        if group not in raw:
            raise MissingChannelError(f"Sensor group missing: {group}")
    with_ext = "ext_velocity" in raw

    t_end = max(float(raw[g]["t"].iloc[-1]) for g in raw.groups)
    ticks = tick_grid(t_end, rate)

    held = {"t": ticks}
    for group, table in raw.groups.items():
        channels = [c for c in table.columns if c != "t"]
        values = zoh_resample(table["t"].to_numpy(), table[channels].to_numpy(), ticks, name=group)
        for i, channel in enumerate(channels):
            held[channel] = values[:, i]

    torque = np.column_stack([held[c] for c in WHEEL_TORQUE_COLUMNS])
    held["tq_f"] = torque[:, 0] + torque[:, 1]
    held["tq_r"] = torque[:, 2] + torque[:, 3]

    columns = frame_columns(with_ext)
    frames = pd.DataFrame({c: held[c] for c in columns}, columns=columns)
    logger.info(f"Synchronized {len(raw.groups)} groups to {len(frames)} frames at {rate:g} Hz")
    return frames
