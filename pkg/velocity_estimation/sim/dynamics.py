"""Planar two-track vehicle model.

Per-wheel slip quantities feed the magic-formula curves; the resulting
forces drive the body (vx, vy, yaw rate) and the wheel spin. Wheel spin is
integrated with a linearized implicit step so the stiff tire/wheel
coupling stays stable at a 1 ms step.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence, Tuple

import numpy as np

from velocity_estimation.core.exceptions import NonFiniteStateError
from velocity_estimation.sim.params import FRONT_WHEELS, VehicleParams
from velocity_estimation.sim.tire import magic_formula, magic_formula_slope

MAX_STEP = 0.01


@dataclass(frozen=True)
class Controls:
    """Actuator commands held constant over one integration step."""

    steering: float = 0.0
    wheel_torques: np.ndarray = field(default_factory=lambda: np.zeros(4))


@dataclass(frozen=True)
class GroundTruthState:
    """Exact vehicle state; ``ax``/``ay`` are body-frame accelerations at the CG."""

    time: float = 0.0
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    yaw_rate: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    wheel_omega: np.ndarray = field(default_factory=lambda: np.zeros(4))
    steering: float = 0.0
    wheel_torque: np.ndarray = field(default_factory=lambda: np.zeros(4))

    @classmethod
    def rolling(cls, vx: float, params: VehicleParams, **kwargs) -> "GroundTruthState":
        """Straight-line state with free-rolling wheels at speed ``vx``."""
        return cls(vx=vx, wheel_omega=vx / params.radii, **kwargs)

    def is_finite(self) -> bool:
        scalars = (self.x, self.y, self.heading, self.vx, self.vy, self.yaw_rate, self.ax, self.ay)
        return bool(np.all(np.isfinite(scalars)) and np.all(np.isfinite(self.wheel_omega)))


class TwoTrackModel:
    """Cached geometry and tire coefficients for repeated stepping."""

    def __init__(self, params: VehicleParams) -> None:
        self.params = params
        pos = params.positions
        self.px = pos[:, 0].copy()
        self.py = pos[:, 1].copy()
        self.radius = params.radii
        self.fz = params.normal_loads()
        self.front = np.zeros(4, dtype=bool)
        self.front[list(FRONT_WHEELS)] = True
        self.lat_B = np.where(self.front, params.lat_B_front, params.lat_B_rear)

    def wheel_angles(self, steering: float) -> np.ndarray:
        return np.where(self.front, steering, 0.0)

    def slip(self, vx: float, vy: float, r: float, omega: np.ndarray, steering: float):
        """
        Slip ratio, slip angle and slip denominator per wheel.

        Returns:
            (slip_ratio, slip_angle, denom, cos_delta, sin_delta)
        """
        delta = self.wheel_angles(steering)
        cos_d, sin_d = np.cos(delta), np.sin(delta)
        vcx = vx - r * self.py
        vcy = vy + r * self.px
        v_long = cos_d * vcx + sin_d * vcy
        v_lat = -sin_d * vcx + cos_d * vcy
        denom = np.maximum(np.abs(v_long), self.params.min_slip_speed)
        slip_ratio = (omega * self.radius - v_long) / denom
        slip_angle = np.arctan2(v_lat, denom)
        return slip_ratio, slip_angle, denom, cos_d, sin_d

    def wheel_forces(self, slip_ratio: np.ndarray, slip_angle: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Longitudinal and lateral force per wheel in the wheel frame."""
        p = self.params
        fx = self.fz * magic_formula(slip_ratio, p.tire_B, p.tire_C, p.tire_D, p.tire_E)
        fy = -self.fz * magic_formula(slip_angle, self.lat_B, p.lat_C, p.tire_D, p.lat_E)
        return fx, fy

    def body_forces(self, vx, vy, r, omega, steering):
        """Body-frame force sums and yaw moment, plus wheel-frame Fx."""
        sr, alpha, denom, cos_d, sin_d = self.slip(vx, vy, r, omega, steering)
        fx_w, fy_w = self.wheel_forces(sr, alpha)
        fx_b = cos_d * fx_w - sin_d * fy_w
        fy_b = sin_d * fx_w + cos_d * fy_w
        mz = float(np.sum(self.px * fy_b - self.py * fx_b))
        return float(np.sum(fx_b)), float(np.sum(fy_b)), mz, fx_w, sr, denom

    def step(self, state: GroundTruthState, controls: Controls, dt: float) -> GroundTruthState:
        p = self.params
        torque = np.asarray(controls.wheel_torques, dtype=float)
        steering = float(controls.steering)
        vx, vy, r = state.vx, state.vy, state.yaw_rate

        # Wheel spin, linearized implicit in the tire force
        sr, alpha, denom, _, _ = self.slip(vx, vy, r, state.wheel_omega, steering)
        fx_w, _ = self.wheel_forces(sr, alpha)
        k = self.fz * magic_formula_slope(sr, p.tire_B, p.tire_C, p.tire_D, p.tire_E) * self.radius / denom
        k = np.maximum(k, 0.0)
        omega = state.wheel_omega + dt * (torque - self.radius * fx_w) / (
            p.wheel_inertia + dt * self.radius * k
        )

        fx, fy, mz, _, _, _ = self.body_forces(vx, vy, r, omega, steering)
        ax = fx / p.mass
        ay = fy / p.mass

        # Rotate the velocity with the body, then add the force increment
        c, s = np.cos(r * dt), np.sin(r * dt)
        vx_new = c * vx + s * vy + dt * ax
        vy_new = -s * vx + c * vy + dt * ay
        r_new = r + dt * mz / p.yaw_inertia

        heading = state.heading + dt * r_new
        ch, sh = np.cos(heading), np.sin(heading)
        new_state = GroundTruthState(
            time=state.time + dt,
            x=state.x + dt * (ch * vx_new - sh * vy_new),
            y=state.y + dt * (sh * vx_new + ch * vy_new),
            heading=float(heading),
            vx=float(vx_new),
            vy=float(vy_new),
            yaw_rate=float(r_new),
            ax=float(ax),
            ay=float(ay),
            wheel_omega=omega,
            steering=steering,
            wheel_torque=torque.copy(),
        )
        if not new_state.is_finite():
            raise NonFiniteStateError(
                f"Integration diverged at t={new_state.time:.3f}s (dt={dt}, vx={vx_new}, vy={vy_new})"
            )
        return new_state


def step_dynamics(
    state: GroundTruthState,
    controls: Controls,
    params: VehicleParams,
    dt: float,
) -> GroundTruthState:
    """
    Advance the two-track model by one step.

    Args:
        state: Current ground-truth state
        controls: Steering angle and per-wheel torques
        params: Vehicle parameters
        dt: Step in seconds, in (0, 0.01]

    Returns:
        State at ``state.time + dt`` with the accelerations of the step

    Raises:
        NonFiniteStateError: If the update produced NaN/inf
    """
    if not 0.0 < dt <= MAX_STEP:
        raise ValueError(f"dt must be in (0, {MAX_STEP}], got {dt}")
    return TwoTrackModel(params).step(state, controls, dt)


def slip_ratios(state: GroundTruthState, params: VehicleParams) -> np.ndarray:
    """Per-wheel longitudinal slip ratio of a state."""
    sr, _, _, _, _ = TwoTrackModel(params).slip(
        state.vx, state.vy, state.yaw_rate, state.wheel_omega, state.steering
    )
    return sr


def rear_axle_sideslip(state: GroundTruthState, params: VehicleParams) -> float:
    """Sideslip angle in rad of the velocity at the rear axle centre."""
    return float(np.arctan2(state.vy + state.yaw_rate * params.rear_axle_x, state.vx))


def contact_velocities(state: GroundTruthState, params: VehicleParams) -> np.ndarray:
    """Car-frame velocity of each wheel centre, shape (4, 2)."""
    pos = params.positions
    return np.column_stack(
        (state.vx - state.yaw_rate * pos[:, 1], state.vy + state.yaw_rate * pos[:, 0])
    )


def kinetic_energy(state: GroundTruthState, params: VehicleParams) -> float:
    """Translational, yaw and wheel-spin kinetic energy in J."""
    body = 0.5 * params.mass * (state.vx ** 2 + state.vy ** 2)
    yaw = 0.5 * params.yaw_inertia * state.yaw_rate ** 2
    wheels = 0.5 * params.wheel_inertia * float(np.sum(np.asarray(state.wheel_omega) ** 2))
    return body + yaw + wheels


def advance(
    state: GroundTruthState,
    controls: Controls,
    model: TwoTrackModel,
    dt: float,
    steps: int,
) -> GroundTruthState:
    """Hold ``controls`` for ``steps`` integration steps."""
    for _ in range(steps):
        state = model.step(state, controls, dt)
    return state


def states_to_arrays(states: Sequence[GroundTruthState]) -> dict:
    """Column arrays for a trajectory (used by sensor synthesis and CSV output)."""
    return {
        "t": np.array([s.time for s in states]),
        "x": np.array([s.x for s in states]),
        "y": np.array([s.y for s in states]),
        "heading": np.array([s.heading for s in states]),
        "vx": np.array([s.vx for s in states]),
        "vy": np.array([s.vy for s in states]),
        "yaw_rate": np.array([s.yaw_rate for s in states]),
        "ax": np.array([s.ax for s in states]),
        "ay": np.array([s.ay for s in states]),
        "steering": np.array([s.steering for s in states]),
        "wheel_omega": np.array([s.wheel_omega for s in states]).reshape(-1, 4),
        "wheel_torque": np.array([s.wheel_torque for s in states]).reshape(-1, 4),
    }


def with_time(state: GroundTruthState, time: float) -> GroundTruthState:
    return replace(state, time=time)
