"""Vehicle, surface and sensor-fault configuration models."""
from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

WHEEL_NAMES: Tuple[str, ...] = ("fl", "fr", "rl", "rr")
FRONT_WHEELS: Tuple[int, ...] = (0, 1)
GRAVITY = 9.81

SensorId = Literal["imu1", "imu2", "wheels", "torques", "steering", "ext_velocity"]
SurfaceName = Literal["flat", "gravel", "bumpy", "wet"]


def _group_flat(v, size: int):
    """Regroup a flat key=value list into tuples of ``size``."""
    if isinstance(v, (list, tuple)) and v and not isinstance(v[0], (list, tuple)):
        if len(v) % size:
            raise ValueError(f"expected a multiple of {size} values, got {len(v)}")
        return [tuple(v[i:i + size]) for i in range(0, len(v), size)]
    return v


class VehicleParams(BaseModel):
    """
    Planar two-track vehicle with magic-formula tires.

    Wheels are ordered front-left, front-right, rear-left, rear-right; the
    car frame has x forward and y to the left. ``tire_D`` is the friction
    coefficient shared by the longitudinal and lateral curves, so changing
    grip changes both.
    """

    mass: float = Field(default=200.0, gt=0.0)
    yaw_inertia: float = Field(default=100.0, gt=0.0)
    wheel_positions: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(0.765, 0.6), (0.765, -0.6), (-0.765, 0.6), (-0.765, -0.6)]
    )
    wheel_radius: List[float] = Field(default_factory=lambda: [0.2, 0.2, 0.2, 0.2])
    wheel_inertia: float = Field(default=0.5, gt=0.0)

    # Longitudinal magic formula
    tire_B: float = Field(default=10.0, gt=0.0)
    tire_C: float = Field(default=1.9, gt=0.0)
    tire_D: float = Field(default=1.2, gt=0.0)
    tire_E: float = Field(default=0.97, le=1.0)

    # Lateral magic formula (peak from tire_D)
    lat_B_front: float = Field(default=7.5, gt=0.0)
    lat_B_rear: float = Field(default=8.0, gt=0.0)
    lat_C: float = Field(default=1.3, gt=0.0)
    lat_E: float = Field(default=0.0, le=1.0)

    torque_to_slip_gain: float = Field(default=0.001, gt=0.0)
    sr_max: float = Field(default=0.2, gt=0.0, lt=1.0)
    max_steering: float = Field(default=0.4, gt=0.0)
    max_torque: float = Field(default=250.0, gt=0.0)
    min_slip_speed: float = Field(default=1.0, gt=0.0, description="Slip denominator floor in m/s")

    @field_validator("wheel_positions", mode="before")
    @classmethod
    def group_positions(cls, v):
        return _group_flat(v, 2)

    @field_validator("wheel_positions")
    @classmethod
    def validate_positions(cls, v):
        if len(v) != 4:
            raise ValueError("wheel_positions needs 4 (px, py) pairs")
        for i, (px, _) in enumerate(v):
            if i in FRONT_WHEELS and px <= 0.0:
                raise ValueError(f"front wheel {WHEEL_NAMES[i]} must have px > 0")
            if i not in FRONT_WHEELS and px >= 0.0:
                raise ValueError(f"rear wheel {WHEEL_NAMES[i]} must have px < 0")
        return [(float(px), float(py)) for px, py in v]

    @field_validator("wheel_radius")
    @classmethod
    def validate_radius(cls, v):
        if len(v) != 4 or any(r <= 0.0 for r in v):
            raise ValueError("wheel_radius needs 4 positive radii")
        return [float(r) for r in v]

    @property
    def positions(self) -> np.ndarray:
        """Wheel positions as a (4, 2) array."""
        return np.asarray(self.wheel_positions, dtype=float)

    @property
    def radii(self) -> np.ndarray:
        return np.asarray(self.wheel_radius, dtype=float)

    @property
    def wheelbase(self) -> float:
        px = self.positions[:, 0]
        return float(px[list(FRONT_WHEELS)].mean() - px[[2, 3]].mean())

    @property
    def rear_axle_x(self) -> float:
        return float(self.positions[[2, 3], 0].mean())

    def normal_loads(self) -> np.ndarray:
        """Static normal load per wheel in N (no load transfer)."""
        px = self.positions[:, 0]
        a = px[list(FRONT_WHEELS)].mean()
        b = -px[[2, 3]].mean()
        axle_front = self.mass * GRAVITY * b / (a + b)
        axle_rear = self.mass * GRAVITY * a / (a + b)
        return np.array([axle_front, axle_front, axle_rear, axle_rear]) / 2.0

    def with_surface(self, surface: "SurfaceName") -> "VehicleParams":
        """Copy with the grip of a surface class."""
        return self.model_copy(update={"tire_D": SURFACES[surface].grip})


class Surface(BaseModel):
    """Road surface emulated as a grip level and a sensor noise multiplier."""

    name: SurfaceName
    grip: float = Field(gt=0.0)
    noise_scale: float = Field(default=1.0, ge=0.0)


SURFACES: Dict[str, Surface] = {
    "flat": Surface(name="flat", grip=1.2, noise_scale=1.0),
    "gravel": Surface(name="gravel", grip=0.8, noise_scale=1.5),
    "bumpy": Surface(name="bumpy", grip=1.0, noise_scale=2.5),
    "wet": Surface(name="wet", grip=0.7, noise_scale=1.0),
}


class NoiseSigmas(BaseModel):
    """Additive white noise standard deviation per channel type."""

    accel: float = Field(default=0.05, ge=0.0)
    gyro: float = Field(default=0.002, ge=0.0)
    wheel: float = Field(default=0.1, ge=0.0)
    steering: float = Field(default=0.001, ge=0.0)
    torque: float = Field(default=0.5, ge=0.0)
    ext_velocity: float = Field(default=0.03, ge=0.0)

    def scaled(self, factor: float) -> "NoiseSigmas":
        return NoiseSigmas(**{k: v * factor for k, v in self.model_dump().items()})

    @classmethod
    def zero(cls) -> "NoiseSigmas":
        return cls(accel=0.0, gyro=0.0, wheel=0.0, steering=0.0, torque=0.0, ext_velocity=0.0)


class FreezeEvent(BaseModel):
    """A channel group that stops updating from ``t_start`` onwards."""

    sensor_id: SensorId
    t_start: float = Field(ge=0.0)


class SensorFaultPlan(BaseModel):
    """
    Biases, noise levels and faults injected while synthesizing sensors.

    ``imu_bias`` holds one (bax, bay, bgz) triple per IMU.
    """

    imu_bias: List[Tuple[float, float, float]] = Field(
        default_factory=lambda: [(0.0, 0.0, 0.0), (0.0, 0.0, 0.0)]
    )
    noise_sigmas: NoiseSigmas = Field(default_factory=NoiseSigmas)
    freeze_events: List[FreezeEvent] = Field(default_factory=list)
    launch_slip_ratio: float = Field(default=0.2, gt=0.0, lt=1.0)
    ext_offset: Tuple[float, float] = (1.0, 0.0)

    @field_validator("imu_bias", mode="before")
    @classmethod
    def group_bias(cls, v):
        return _group_flat(v, 3)

    @field_validator("imu_bias")
    @classmethod
    def validate_bias(cls, v):
        if len(v) != 2:
            raise ValueError("imu_bias needs one (bax, bay, bgz) triple per IMU")
        return [tuple(float(b) for b in triple) for triple in v]

    @model_validator(mode="before")
    @classmethod
    def route_flat_keys(cls, data: Any) -> Any:
        """``freeze_<sensor>=t`` and ``noise_<channel>=sigma`` from key=value files."""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        freezes = [
            {"sensor_id": key[len("freeze_"):], "t_start": data.pop(key)}
            for key in list(data) if key.startswith("freeze_") and key != "freeze_events"
        ]
        if freezes:
            data["freeze_events"] = [*data.get("freeze_events", []), *freezes]
        sigmas = {
            key[len("noise_"):]: data.pop(key)
            for key in list(data) if key.startswith("noise_") and key != "noise_sigmas"
        }
        if sigmas:
            base = data.get("noise_sigmas") or {}
            if isinstance(base, NoiseSigmas):
                base = base.model_dump()
            data["noise_sigmas"] = {**base, **sigmas}
        return data

    def to_key_values(self) -> Dict[str, Any]:
        values: Dict[str, Any] = {
            "imu_bias": self.imu_bias,
            "launch_slip_ratio": self.launch_slip_ratio,
            "ext_offset": self.ext_offset,
        }
        values.update({f"noise_{k}": v for k, v in self.noise_sigmas.model_dump().items()})
        values.update({f"freeze_{e.sensor_id}": e.t_start for e in self.freeze_events})
        return values

    def check_duration(self, duration: float) -> None:
        """Raise if a freeze event starts outside ``[0, duration]``."""
        for event in self.freeze_events:
            if event.t_start > duration:
                raise ValueError(
                    f"freeze of {event.sensor_id} at {event.t_start}s is after the end ({duration}s)"
                )

    def freeze_time(self, sensor_id: str) -> Optional[float]:
        times = [e.t_start for e in self.freeze_events if e.sensor_id == sensor_id]
        return min(times) if times else None

    @classmethod
    def randomized(cls, seed: int, **overrides) -> "SensorFaultPlan":
        """Per-dataset biases drawn uniformly in ±0.3 m/s² and ±0.01 rad/s."""
        rng = np.random.default_rng(seed)
        bias = [
            (
                float(rng.uniform(-0.3, 0.3)),
                float(rng.uniform(-0.3, 0.3)),
                float(rng.uniform(-0.01, 0.01)),
            )
            for _ in range(2)
        ]
        return cls(imu_bias=bias, **overrides)

    @model_validator(mode="after")
    def validate_freezes(self):
        seen = set()
        for event in self.freeze_events:
            if event.sensor_id in seen:
                raise ValueError(f"duplicate freeze event for {event.sensor_id}")
            seen.add(event.sensor_id)
        return self
