"""Synchronized frame and dataset types.

Frames travel through the pipeline as pandas tables with a fixed column
order; ``SensorFrame`` is the per-sample view used by streaming code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from velocity_estimation.core.exceptions import LengthMismatchError, MissingChannelError
from velocity_estimation.utils.validation import validate_columns, validate_same_timestamps

INPUT_COLUMNS: List[str] = [
    "imu1_ax", "imu1_ay", "imu1_gz",
    "imu2_ax", "imu2_ay", "imu2_gz",
    "w_fl", "w_fr", "w_rl", "w_rr",
    "tq_f", "tq_r",
    "steer",
]
EXT_COLUMNS: List[str] = ["ext_vx", "ext_vy"]
WHEEL_TORQUE_COLUMNS: List[str] = ["tq_fl", "tq_fr", "tq_rl", "tq_rr"]
TARGET_COLUMNS: List[str] = ["vx", "vy", "yawrate", "ax", "ay"]

N_INPUTS = len(INPUT_COLUMNS)
N_OUTPUTS = len(TARGET_COLUMNS)


def frame_columns(with_ext: bool) -> List[str]:
    """Column order of a synchronized frame table."""
    return ["t", *INPUT_COLUMNS, *(EXT_COLUMNS if with_ext else []), *WHEEL_TORQUE_COLUMNS]


@dataclass(frozen=True)
class SensorFrame:
    """One 200 Hz sample of all synchronized channels."""

    t: float
    imu1: np.ndarray
    imu2: np.ndarray
    wheel_omega: np.ndarray
    torque_front: float
    torque_rear: float
    steering: float
    ext_velocity: Optional[np.ndarray] = None
    wheel_torque: Optional[np.ndarray] = None

    def inputs(self) -> np.ndarray:
        """The 13 network inputs in ``INPUT_COLUMNS`` order."""
        return np.concatenate((
            self.imu1, self.imu2, self.wheel_omega,
            [self.torque_front, self.torque_rear, self.steering],
        ))

    @classmethod
    def from_values(cls, values: Dict[str, float]) -> "SensorFrame":
        ext = None
        if all(c in values for c in EXT_COLUMNS):
            ext = np.array([values[c] for c in EXT_COLUMNS], dtype=float)
        wheel_torque = None
        if all(c in values for c in WHEEL_TORQUE_COLUMNS):
            wheel_torque = np.array([values[c] for c in WHEEL_TORQUE_COLUMNS], dtype=float)
        return cls(
            t=float(values["t"]),
            imu1=np.array([values["imu1_ax"], values["imu1_ay"], values["imu1_gz"]], dtype=float),
            imu2=np.array([values["imu2_ax"], values["imu2_ay"], values["imu2_gz"]], dtype=float),
            wheel_omega=np.array([values[c] for c in ("w_fl", "w_fr", "w_rl", "w_rr")], dtype=float),
            torque_front=float(values["tq_f"]),
            torque_rear=float(values["tq_r"]),
            steering=float(values["steer"]),
            ext_velocity=ext,
            wheel_torque=wheel_torque,
        )

    def to_values(self) -> Dict[str, float]:
        values = {"t": self.t}
        values.update(zip(INPUT_COLUMNS, self.inputs()))
        if self.ext_velocity is not None:
            values.update(zip(EXT_COLUMNS, self.ext_velocity))
        torque = self.wheel_torque
        if torque is None:
            # Axle sums split evenly when per-wheel torques are absent
            torque = np.repeat([self.torque_front / 2.0, self.torque_rear / 2.0], 2)
        values.update(zip(WHEEL_TORQUE_COLUMNS, torque))
        return values


FrameInput = Union[pd.DataFrame, Sequence[SensorFrame]]


def as_frame_table(frames: FrameInput) -> pd.DataFrame:
    """Accept a frame table or a sequence of ``SensorFrame`` and return a table."""
    if isinstance(frames, pd.DataFrame):
        table = frames
    else:
        table = pd.DataFrame([f.to_values() for f in frames])
    is_valid, error = validate_columns(table, ["t", *INPUT_COLUMNS], name="frames")
    if not is_valid:
        raise MissingChannelError(error)
    return table


def frames_from_table(table: pd.DataFrame) -> List[SensorFrame]:
    return [SensorFrame.from_values(row) for row in table.to_dict(orient="records")]


def has_external_velocity(table: pd.DataFrame) -> bool:
    return all(c in table.columns for c in EXT_COLUMNS)


@dataclass
class Dataset:
    """Aligned frames and targets of one scenario run plus provenance."""

    name: str
    frames: pd.DataFrame
    targets: Optional[pd.DataFrame] = None
    split: Optional[str] = None
    provenance: Dict[str, str] = field(default_factory=dict)
    ground_truth: Optional[pd.DataFrame] = None

    def __post_init__(self) -> None:
        if self.targets is not None:
            is_valid, error = validate_same_timestamps(
                self.frames["t"].to_numpy(), self.targets["t"].to_numpy()
            )
            if not is_valid:
                raise LengthMismatchError(f"{self.name}: frames and targets misaligned ({error})")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def seed(self) -> Optional[int]:
        return int(self.provenance["seed"]) if "seed" in self.provenance else None

    @property
    def surface(self) -> str:
        return self.provenance.get("surface", "flat")

    def inputs(self) -> np.ndarray:
        return self.frames[INPUT_COLUMNS].to_numpy(dtype=float)

    def target_values(self) -> np.ndarray:
        if self.targets is None:
            raise MissingChannelError(f"{self.name} has no targets")
        return self.targets[TARGET_COLUMNS].to_numpy(dtype=float)
