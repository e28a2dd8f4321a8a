"""CSV and manifest I/O for simulated runs.

A run directory holds one ``raw_<group>.csv`` per sensor group, the 200 Hz
``ground_truth.csv`` and a key=value ``manifest.txt``.
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from velocity_estimation.core.exceptions import MissingChannelError, NonFiniteInputError
from velocity_estimation.sim.dynamics import GroundTruthState, states_to_arrays
from velocity_estimation.sim.scenarios import ScenarioResult
from velocity_estimation.sim.sensors import CHANNEL_GROUPS, RawSensorStream
from velocity_estimation.utils.logging import get_logger
from velocity_estimation.utils.validation import validate_columns, validate_finite

logger = get_logger(__name__)

GROUND_TRUTH_COLUMNS = [
    "t", "x", "y", "heading", "vx", "vy", "yaw_rate", "ax", "ay", "steer",
    "omega_fl", "omega_fr", "omega_rl", "omega_rr",
    "torque_fl", "torque_fr", "torque_rl", "torque_rr",
]

MANIFEST_NAME = "manifest.txt"
GROUND_TRUTH_NAME = "ground_truth.csv"


def write_csv(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write a table with 6-decimal time and full-precision values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = table.copy()
    if "t" in out.columns:
        out["t"] = out["t"].map(lambda v: f"{v:.6f}")
    out.to_csv(path, index=False, float_format="%.9g")
    return path


def read_csv(path: Union[str, Path], required: Optional[List[str]] = None) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV not found: {path}")
    table = pd.read_csv(path)
    if required:
        is_valid, error = validate_columns(table, required, name=path.name)
        if not is_valid:
            raise MissingChannelError(error)
        is_valid, error = validate_finite(table[required].to_numpy(dtype=float), name=path.name)
        if not is_valid:
            raise NonFiniteInputError(error)
    return table


def trajectory_to_frame(trajectory: List[GroundTruthState]) -> pd.DataFrame:
    gt = states_to_arrays(trajectory)
    columns = {key: gt[key] for key in ("t", "x", "y", "heading", "vx", "vy", "yaw_rate", "ax", "ay")}
    columns["steer"] = gt["steering"]
    for i, wheel in enumerate(("fl", "fr", "rl", "rr")):
        columns[f"omega_{wheel}"] = gt["wheel_omega"][:, i]
    for i, wheel in enumerate(("fl", "fr", "rl", "rr")):
        columns[f"torque_{wheel}"] = gt["wheel_torque"][:, i]
    return pd.DataFrame(columns, columns=GROUND_TRUTH_COLUMNS)


def frame_to_trajectory(table: pd.DataFrame) -> List[GroundTruthState]:
    omega = table[["omega_fl", "omega_fr", "omega_rl", "omega_rr"]].to_numpy()
    torque = table[["torque_fl", "torque_fr", "torque_rl", "torque_rr"]].to_numpy()
    states = []
    for i, row in enumerate(table.itertuples(index=False)):
        states.append(GroundTruthState(
            time=row.t, x=row.x, y=row.y, heading=row.heading,
            vx=row.vx, vy=row.vy, yaw_rate=row.yaw_rate, ax=row.ax, ay=row.ay,
            wheel_omega=omega[i].copy(), steering=row.steer, wheel_torque=torque[i].copy(),
        ))
    return states


def write_manifest(entries: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key}={value}" for key, value in entries.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found: {path}")
    return {k: v for k, v in dotenv_values(path).items() if v is not None}


def write_raw_stream(stream: RawSensorStream, directory: Union[str, Path]) -> List[Path]:
    directory = Path(directory)
    return [write_csv(table, directory / f"raw_{group}.csv") for group, table in stream.groups.items()]


def read_raw_stream(directory: Union[str, Path]) -> RawSensorStream:
    """Load every ``raw_<group>.csv`` found in a run directory."""
    directory = Path(directory)
    stream = RawSensorStream()
    for group, (rate, names) in CHANNEL_GROUPS.items():
        path = directory / f"raw_{group}.csv"
        if not path.exists():
            logger.warning(f"{directory.name}: no {path.name}, group skipped")
            continue
        stream.groups[group] = read_csv(path, required=["t", *names])
        stream.rates[group] = rate
    stream.validate()
    return stream


def write_run(result: ScenarioResult, directory: Union[str, Path]) -> Path:
    """Write raw streams, ground truth and manifest of a scenario run."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_raw_stream(result.stream, directory)
    write_csv(trajectory_to_frame(result.trajectory), directory / GROUND_TRUTH_NAME)
    write_manifest(result.manifest(), directory / MANIFEST_NAME)
    logger.info(f"Run {result.spec.name} written to {directory}")
    return directory


def read_ground_truth(directory: Union[str, Path]) -> pd.DataFrame:
    return read_csv(Path(directory) / GROUND_TRUTH_NAME, required=GROUND_TRUTH_COLUMNS)


def parse_floats(value: str) -> np.ndarray:
    """Comma separated manifest value as a float array."""
    return np.array([float(v) for v in value.split(",") if v.strip()])
