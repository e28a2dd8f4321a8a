"""Sensor synthesis at native rates.

Ground truth sampled at 200 Hz is interpolated onto each channel group's
own clock, then biases, white noise and freeze faults are applied.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from velocity_estimation.core.exceptions import MissingChannelError
from velocity_estimation.sim.dynamics import GroundTruthState, states_to_arrays
from velocity_estimation.sim.params import SensorFaultPlan
from velocity_estimation.utils.logging import get_logger
from velocity_estimation.utils.validation import validate_timestamps

logger = get_logger(__name__)

# group -> (native rate in Hz, channel names)
CHANNEL_GROUPS: Dict[str, Tuple[float, Tuple[str, ...]]] = {
    "imu1": (200.0, ("imu1_ax", "imu1_ay", "imu1_gz")),
    "imu2": (125.0, ("imu2_ax", "imu2_ay", "imu2_gz")),
    "steering": (200.0, ("steer",)),
    "wheels": (100.0, ("w_fl", "w_fr", "w_rl", "w_rr")),
    "torques": (100.0, ("tq_fl", "tq_fr", "tq_rl", "tq_rr")),
    "ext_velocity": (200.0, ("ext_vx", "ext_vy")),
}

TIME_TOLERANCE = 1e-9


@dataclass
class RawSensorStream:
    """Per-group tables with a ``t`` column followed by the group's channels."""

    groups: Dict[str, pd.DataFrame] = field(default_factory=dict)
    rates: Dict[str, float] = field(default_factory=dict)

    def __getitem__(self, group: str) -> pd.DataFrame:
        if group not in self.groups:
            raise MissingChannelError(f"Sensor group not in stream: {group}")
        return self.groups[group]

    def __contains__(self, group: str) -> bool:
        return group in self.groups

    @property
    def channel_names(self) -> Tuple[str, ...]:
        return tuple(c for df in self.groups.values() for c in df.columns if c != "t")

    def channel(self, name: str) -> pd.DataFrame:
        """Two-column ``t,<name>`` table for a single channel."""
        for df in self.groups.values():
            if name in df.columns:
                return df[["t", name]]
        raise MissingChannelError(f"Channel not in stream: {name}")

    def validate(self) -> None:
        for group, df in self.groups.items():
            is_valid, error = validate_timestamps(df["t"].to_numpy(), name=group)
            if not is_valid:
                raise ValueError(error)


def native_times(rate: float, t_end: float) -> np.ndarray:
    """Sample instants k/rate covering [0, t_end]."""
    count = int(np.floor(t_end * rate + TIME_TOLERANCE)) + 1
    return np.arange(count) / rate


def _apply_freeze(values: np.ndarray, times: np.ndarray, t_freeze: float) -> np.ndarray:
    """Repeat the last sample at or before ``t_freeze`` for all later samples."""
    frozen = values.copy()
    held = int(np.searchsorted(times, t_freeze + TIME_TOLERANCE, side="right")) - 1
    if held < 0:
        held = 0
    frozen[held + 1:] = frozen[held]
    return frozen


def synthesize_sensors(
    trajectory: Sequence[GroundTruthState],
    plan: SensorFaultPlan,
    seed: int,
    ext_offset: Optional[Tuple[float, float]] = None,
) -> RawSensorStream:
    """
    Emit every sensor group at its native rate.

    Args:
        trajectory: Ground truth at 200 Hz or faster, starting at t=0
        plan: Biases, noise levels and freeze events
        seed: Noise seed; identical inputs give bit-identical streams
        ext_offset: Mounting position of the external velocity sensor
            (defaults to ``plan.ext_offset``)

    Returns:
        RawSensorStream with groups imu1, imu2, steering, wheels, torques,
        ext_velocity
    """
    gt = states_to_arrays(trajectory)
    t_gt = gt["t"]
    t_end = float(t_gt[-1])
    rng = np.random.default_rng(seed)
    sig = plan.noise_sigmas
    px, py = ext_offset if ext_offset is not None else plan.ext_offset

    stream = RawSensorStream()
    for group, (rate, names) in CHANNEL_GROUPS.items():
        times = native_times(rate, t_end)

        def sample(values: np.ndarray) -> np.ndarray:
            return np.interp(times, t_gt, values)

        if group in ("imu1", "imu2"):
            bias = plan.imu_bias[0 if group == "imu1" else 1]
            clean = np.column_stack((sample(gt["ax"]), sample(gt["ay"]), sample(gt["yaw_rate"])))
            sigmas = np.array([sig.accel, sig.accel, sig.gyro])
            values = clean + np.asarray(bias) + rng.standard_normal(clean.shape) * sigmas
        elif group == "steering":
            clean = sample(gt["steering"])[:, None]
            values = clean + rng.standard_normal(clean.shape) * sig.steering
        elif group == "wheels":
            clean = np.column_stack([sample(gt["wheel_omega"][:, i]) for i in range(4)])
            values = clean + rng.standard_normal(clean.shape) * sig.wheel
        elif group == "torques":
            clean = np.column_stack([sample(gt["wheel_torque"][:, i]) for i in range(4)])
            values = clean + rng.standard_normal(clean.shape) * sig.torque
        else:
            r = sample(gt["yaw_rate"])
            clean = np.column_stack((sample(gt["vx"]) - r * py, sample(gt["vy"]) + r * px))
            values = clean + rng.standard_normal(clean.shape) * sig.ext_velocity

        t_freeze = plan.freeze_time(group)
        if t_freeze is not None:
            values = _apply_freeze(values, times, t_freeze)
            logger.debug(f"{group} frozen from t={t_freeze}s")

        table = pd.DataFrame(values, columns=list(names))
        table.insert(0, "t", times)
        stream.groups[group] = table
        stream.rates[group] = rate

    logger.debug(f"Synthesized {len(stream.groups)} sensor groups over {t_end:.2f}s (seed {seed})")
    return stream
