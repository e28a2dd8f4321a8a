"""State, noise and configuration types of the mixed Kalman filter."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import chi2

from velocity_estimation.core.config import EstimatorMode

STATE_NAMES: Tuple[str, ...] = ("vx", "vy", "yaw_rate", "ax", "ay")
N_STATES = len(STATE_NAMES)
VX, VY, YAW_RATE, AX, AY = range(N_STATES)


@dataclass(frozen=True)
class StateEstimate:
    """[vx, vy, yaw_rate, ax, ay] with optional covariance and reliability flag."""

    vx: float = 0.0
    vy: float = 0.0
    yaw_rate: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    covariance: Optional[np.ndarray] = None
    reliable: bool = True

    def to_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.yaw_rate, self.ax, self.ay], dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray, covariance: Optional[np.ndarray] = None,
                   reliable: bool = True) -> "StateEstimate":
        vx, vy, r, ax, ay = (float(v) for v in values)
        return cls(vx, vy, r, ax, ay, covariance, reliable)


@dataclass(frozen=True)
class ImuBiases:
    """Calibrated biases: accel (2 IMUs × (bax, bay)) and gyro (2 IMUs)."""

    accel: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    gyro: np.ndarray = field(default_factory=lambda: np.zeros(2))


@dataclass(frozen=True)
class FilterState:
    """Filter mean, covariance, calibrated biases and time."""

    mean: np.ndarray
    covariance: np.ndarray
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(2))
    time: float = 0.0

    @property
    def estimate(self) -> StateEstimate:
        return StateEstimate.from_array(self.mean, self.covariance)

    def with_biases(self, biases: ImuBiases) -> "FilterState":
        return replace(self, accel_bias=np.array(biases.accel, dtype=float),
                       gyro_bias=np.array(biases.gyro, dtype=float))

    @classmethod
    def initial(cls, p0_diag: np.ndarray, time: float = 0.0,
                mean: Optional[np.ndarray] = None) -> "FilterState":
        mean = np.zeros(N_STATES) if mean is None else np.asarray(mean, dtype=float)
        return cls(mean=mean, covariance=np.diag(np.asarray(p0_diag, dtype=float)), time=time)


class NoiseConfig(BaseModel):
    """
    Process PSDs, measurement variances, unscented spread and gate level.

    Measurement variances are per native sample; the filter inflates them
    by the hold factor when a channel is repeated by the frame grid.
    """

    model_config = ConfigDict(extra="forbid")

    q_v: float = Field(default=0.1, gt=0.0, description="velocity PSD, (m/s)^2/s")
    q_r: float = Field(default=1.0, gt=0.0, description="yaw-rate PSD, (rad/s)^2/s")
    q_a: float = Field(default=50.0, gt=0.0, description="acceleration PSD, (m/s^2)^2/s")
    accel_var: float = Field(default=0.06 ** 2, gt=0.0)
    gyro_var: float = Field(default=0.003 ** 2, gt=0.0)
    wheel_var: float = Field(default=0.25 ** 2, gt=0.0)
    ext_var: float = Field(default=0.05 ** 2, gt=0.0)
    alpha: float = Field(default=0.1, gt=0.0, le=1.0)
    beta: float = Field(default=2.0, ge=0.0)
    kappa: float = Field(default=0.0, ge=0.0)
    gate_quantile: float = Field(default=0.99, gt=0.0, lt=1.0)
    gate_enabled: bool = True

    def process_psd(self) -> np.ndarray:
        return np.array([self.q_v, self.q_v, self.q_r, self.q_a, self.q_a])

    def gate_threshold(self, dim: int) -> float:
        """Chi-square quantile for a ``dim``-dimensional innovation."""
        return float(chi2.ppf(self.gate_quantile, dim))


class MkfConfig(BaseModel):
    """
    Mixed Kalman filter run configuration.

    Accepts flat key=value input: noise keys at top level are routed into
    ``noise``.
    """

    model_config = ConfigDict(extra="forbid")

    mode: EstimatorMode = "reference"
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    calibration_window: float = Field(default=1.0, ge=1.0, description="Standstill window in s")
    stale_timeout: float = Field(default=0.1, gt=0.0)
    sr_gain: float = Field(default=0.001, gt=0.0)
    sr_max: float = Field(default=0.2, gt=0.0, lt=1.0)
    ext_offset: Tuple[float, float] = (1.0, 0.0)
    p0_velocity: float = Field(default=1.0, gt=0.0)
    p0_yaw_rate: float = Field(default=0.1, gt=0.0)
    p0_accel: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="before")
    @classmethod
    def route_noise_keys(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        flat = {key: data.pop(key) for key in list(data) if key in NoiseConfig.model_fields}
        if flat:
            noise = data.get("noise") or {}
            if isinstance(noise, NoiseConfig):
                noise = noise.model_dump()
            data["noise"] = {**noise, **flat}
        return data

    def p0_diag(self) -> np.ndarray:
        return np.array([self.p0_velocity, self.p0_velocity, self.p0_yaw_rate,
                         self.p0_accel, self.p0_accel])

    def to_key_values(self) -> Dict[str, Any]:
        values = self.model_dump(exclude={"noise"})
        values.update(self.noise.model_dump())
        return values


@dataclass(frozen=True)
class WheelObservation:
    """Wheel speeds, torques and steering of one frame plus wheel geometry."""

    omega: np.ndarray
    torque: np.ndarray
    steering: float
    positions: np.ndarray
    radii: np.ndarray
