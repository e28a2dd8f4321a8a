"""Closed-loop driving scenarios.

Every scenario starts with a standstill prefix (used for bias calibration),
integrates the two-track model at 1 kHz, keeps ground truth at 200 Hz and
synthesizes the sensor stream from it. Scenarios with a target condition
check it at the end and raise ``ScenarioUnreachableError`` when missed.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from velocity_estimation.core.config import settings
from velocity_estimation.core.exceptions import ScenarioUnreachableError
from velocity_estimation.sim.dynamics import (
    Controls,
    GroundTruthState,
    TwoTrackModel,
    rear_axle_sideslip,
    with_time,
)
from velocity_estimation.sim.params import (
    GRAVITY,
    SURFACES,
    FreezeEvent,
    SensorFaultPlan,
    SurfaceName,
    VehicleParams,
)
from velocity_estimation.sim.sensors import RawSensorStream, synthesize_sensors
from velocity_estimation.sim.tire import magic_formula
from velocity_estimation.utils.logging import get_logger, log_performance

logger = get_logger(__name__)

SCENARIOS: Tuple[str, ...] = (
    "standstill",
    "launch",
    "slalom",
    "high_slip_corner",
    "track_lap",
    "imu_freeze_lap",
)

DEFAULT_DURATIONS: Dict[str, float] = {
    "standstill": 10.0,
    "launch": 12.0,
    "slalom": 30.0,
    "high_slip_corner": 30.0,
    "track_lap": 60.0,
    "imu_freeze_lap": 60.0,
}

STANDSTILL_PREFIX = 2.0
SIM_DT = 0.001
OUTPUT_RATE = 200.0

MIN_LAUNCH_SLIP = 0.15
MIN_REAR_SIDESLIP = np.deg2rad(8.0)


class ScenarioSpec(BaseModel):
    """One scenario run: which maneuver, how long, which seed and surface."""

    name: str
    duration: Optional[float] = Field(default=None, gt=STANDSTILL_PREFIX)
    seed: int = Field(default=0, ge=0)
    surface: SurfaceName = "flat"
    randomize_bias: bool = True

    def resolved_duration(self) -> float:
        return self.duration if self.duration is not None else DEFAULT_DURATIONS[self.name]


@dataclass
class ScenarioResult:
    """Trajectory, sensor stream and provenance of a scenario run."""

    spec: ScenarioSpec
    params: VehicleParams
    plan: SensorFaultPlan
    trajectory: List[GroundTruthState]
    stream: RawSensorStream
    summary: Dict[str, float] = field(default_factory=dict)

    def manifest(self) -> Dict[str, Any]:
        bias = self.plan.imu_bias
        entries: Dict[str, Any] = {
            "scenario": self.spec.name,
            "seed": self.spec.seed,
            "surface": self.spec.surface,
            "duration": self.spec.resolved_duration(),
            "grip": self.params.tire_D,
            "noise_scale": SURFACES[self.spec.surface].noise_scale,
            "imu1_bias": ",".join(f"{b:.6f}" for b in bias[0]),
            "imu2_bias": ",".join(f"{b:.6f}" for b in bias[1]),
            "launch_slip_ratio": self.plan.launch_slip_ratio,
            "ext_offset": ",".join(str(v) for v in self.plan.ext_offset),
        }
        for event in self.plan.freeze_events:
            entries[f"freeze_{event.sensor_id}"] = event.t_start
        entries.update(self.summary)
        return entries


class SpeedController:
    """Proportional speed loop splitting the demanded force over four wheels."""

    def __init__(self, params: VehicleParams, kp: float = 2.0) -> None:
        self.params = params
        self.kp = kp
        self.a_limit = 0.8 * params.tire_D * GRAVITY

    def torques(self, state: GroundTruthState, v_target: float, a_ff: float = 0.0) -> np.ndarray:
        a_des = float(np.clip(a_ff + self.kp * (v_target - state.vx), -self.a_limit, self.a_limit))
        torque = self.params.mass * a_des * self.params.radii / 4.0
        return np.clip(torque, -self.params.max_torque, self.params.max_torque)


class Driver:
    """Base driver: a controls policy called at every integration step."""

    def __init__(self, params: VehicleParams, plan: SensorFaultPlan, duration: float) -> None:
        self.params = params
        self.plan = plan
        self.duration = duration
        self.speed = SpeedController(params)

    def initial_state(self) -> GroundTruthState:
        return GroundTruthState()

    def command(self, state: GroundTruthState) -> Controls:
        return Controls()

    def check(self, trajectory: Sequence[GroundTruthState], model: TwoTrackModel) -> Dict[str, float]:
        """Verify the target condition; returns summary scalars."""
        return {}


class StandstillDriver(Driver):
    pass


class LaunchDriver(Driver):
    """Four-wheel traction control holding a target slip ratio, then cruise."""

    max_launch_time = 3.0
    launch_end_speed = 20.0
    k_tc = 200.0

    def __init__(self, params, plan, duration) -> None:
        super().__init__(params, plan, duration)
        self.model = TwoTrackModel(params)
        self.cruising = False
        self.cruise_speed = 0.0

    def _traction_torques(self, state: GroundTruthState) -> np.ndarray:
        p = self.params
        s_target = self.plan.launch_slip_ratio
        radius = self.model.radius
        fx = self.model.fz * magic_formula(s_target, p.tire_B, p.tire_C, p.tire_D, p.tire_E)
        accel = float(np.sum(fx)) / p.mass
        v = state.vx
        if abs(v) >= p.min_slip_speed:
            omega_target = v * (1.0 + s_target) / radius
            omega_rate = accel * (1.0 + s_target) / radius
        else:
            omega_target = (v + s_target * p.min_slip_speed) / radius
            omega_rate = accel / radius
        torque = (
            radius * fx
            + p.wheel_inertia * omega_rate
            + p.wheel_inertia * self.k_tc * (omega_target - state.wheel_omega)
        )
        return np.clip(torque, -p.max_torque, p.max_torque)

    def command(self, state: GroundTruthState) -> Controls:
        if state.time < STANDSTILL_PREFIX:
            return Controls()
        if not self.cruising:
            elapsed = state.time - STANDSTILL_PREFIX
            if state.vx >= self.launch_end_speed or elapsed >= self.max_launch_time:
                self.cruising = True
                self.cruise_speed = state.vx
            else:
                return Controls(0.0, self._traction_torques(state))
        return Controls(0.0, self.speed.torques(state, self.cruise_speed))

    def check(self, trajectory, model) -> Dict[str, float]:
        peak = max(float(np.max(model.slip(s.vx, s.vy, s.yaw_rate, s.wheel_omega, s.steering)[0]))
                   for s in trajectory)
        if peak < MIN_LAUNCH_SLIP:
            raise ScenarioUnreachableError(
                f"launch peak slip ratio {peak:.3f} below {MIN_LAUNCH_SLIP}"
            )
        return {"peak_slip_ratio": peak}


class SlalomDriver(Driver):
    """Open-loop sinusoidal steering at constant speed."""

    speed_target = 10.0
    amplitude = 0.08
    period = 2.5
    settle_time = 5.0

    def command(self, state: GroundTruthState) -> Controls:
        if state.time < STANDSTILL_PREFIX:
            return Controls()
        t_steer = state.time - STANDSTILL_PREFIX - self.settle_time
        steering = self.amplitude * np.sin(2.0 * np.pi * t_steer / self.period) if t_steer > 0 else 0.0
        return Controls(float(steering), self.speed.torques(state, self.speed_target))


class HighSlipCornerDriver(Driver):
    """Constant steering while speed ramps until lateral grip is nearly used up."""

    entry_speed = 8.0
    steering_target = 0.12
    turn_in_time = 1.0
    ramp_rate = 0.8
    ay_fraction = 0.95
    max_speed = 20.0
    hold_time = 3.0

    def __init__(self, params, plan, duration) -> None:
        super().__init__(params, plan, duration)
        self.phase = "accelerate"
        self.phase_start = STANDSTILL_PREFIX
        self.v_target = self.entry_speed

    def _enter(self, phase: str, time: float) -> None:
        logger.debug(f"high_slip_corner: {self.phase} -> {phase} at t={time:.2f}s")
        self.phase = phase
        self.phase_start = time

    def command(self, state: GroundTruthState) -> Controls:
        t = state.time
        if t < STANDSTILL_PREFIX:
            return Controls()
        a_ff = 0.0
        steering = 0.0
        if self.phase == "accelerate":
            if state.vx >= self.entry_speed - 0.1:
                self._enter("turn_in", t)
        elif self.phase == "turn_in":
            frac = min((t - self.phase_start) / self.turn_in_time, 1.0)
            steering = frac * self.steering_target
            if frac >= 1.0:
                self._enter("ramp", t)
        elif self.phase == "ramp":
            steering = self.steering_target
            a_ff = self.ramp_rate
            self.v_target += self.ramp_rate * SIM_DT
            limit = self.ay_fraction * self.params.tire_D * GRAVITY
            if abs(state.ay) >= limit or self.v_target >= self.max_speed:
                self.v_target = state.vx
                a_ff = 0.0
                self._enter("hold", t)
        elif self.phase == "hold":
            steering = self.steering_target
            if t - self.phase_start >= self.hold_time:
                self._enter("exit", t)
        else:
            frac = min((t - self.phase_start) / self.turn_in_time, 1.0)
            steering = (1.0 - frac) * self.steering_target
        return Controls(steering, self.speed.torques(state, self.v_target, a_ff))

    def check(self, trajectory, model) -> Dict[str, float]:
        peak = max(abs(rear_axle_sideslip(s, self.params)) for s in trajectory)
        if peak < MIN_REAR_SIDESLIP:
            raise ScenarioUnreachableError(
                f"high_slip_corner peak rear sideslip {np.rad2deg(peak):.2f} deg below 8 deg"
            )
        return {"peak_rear_sideslip_deg": float(np.rad2deg(peak))}


class TrackLapDriver(Driver):
    """Pure pursuit around a figure-eight with a curvature-limited speed profile."""

    half_length = 40.0
    half_width = 30.0
    v_max = 15.0
    lateral_fraction = 0.6
    control_rate = 50.0
    search_window = 200

    def __init__(self, params, plan, duration) -> None:
        super().__init__(params, plan, duration)
        tau = np.linspace(0.0, 2.0 * np.pi, 4000, endpoint=False)
        a, b = self.half_length, self.half_width
        x, y = a * np.sin(tau), b * np.sin(tau) * np.cos(tau)
        dx, dy = a * np.cos(tau), b * np.cos(2.0 * tau)
        ddx, ddy = -a * np.sin(tau), -2.0 * b * np.sin(2.0 * tau)
        curvature = np.abs(dx * ddy - dy * ddx) / np.power(dx ** 2 + dy ** 2, 1.5)
        self.path = np.column_stack((x, y))
        seg = np.linalg.norm(np.diff(np.vstack((self.path, self.path[:1])), axis=0), axis=1)
        self.arc = np.concatenate(([0.0], np.cumsum(seg)[:-1]))
        self.length = float(np.sum(seg))
        self.speed_profile = np.minimum(
            self.v_max,
            np.sqrt(self.lateral_fraction * params.tire_D * GRAVITY / np.maximum(curvature, 1e-6)),
        )
        self.start_heading = float(np.arctan2(dy[0], dx[0]))
        self.nearest = 0
        self.steering = 0.0
        self.v_target = 0.0
        self.steps_per_update = int(round(1.0 / (self.control_rate * SIM_DT)))
        self.step_count = 0

    def initial_state(self) -> GroundTruthState:
        return GroundTruthState(heading=self.start_heading)

    def _index_at(self, distance: float) -> int:
        s = (self.arc[self.nearest] + distance) % self.length
        return int(np.searchsorted(self.arc, s, side="right") - 1)

    def _update(self, state: GroundTruthState) -> None:
        n = len(self.path)
        window = (self.nearest + np.arange(self.search_window)) % n
        d = np.hypot(self.path[window, 0] - state.x, self.path[window, 1] - state.y)
        self.nearest = int(window[int(np.argmin(d))])

        speed = max(state.vx, 0.0)
        lookahead = 2.0 + 0.5 * speed
        target = self.path[self._index_at(lookahead)]
        dx, dy = target[0] - state.x, target[1] - state.y
        ch, sh = np.cos(state.heading), np.sin(state.heading)
        lateral = -sh * dx + ch * dy
        dist_sq = dx * dx + dy * dy
        steering = np.arctan2(2.0 * self.params.wheelbase * lateral, max(dist_sq, 1e-6))
        self.steering = float(np.clip(steering, -self.params.max_steering, self.params.max_steering))

        # Slow down ahead of tight sections
        ahead = [self._index_at(d) for d in np.linspace(0.0, 2.0 * lookahead + 5.0, 8)]
        self.v_target = float(np.min(self.speed_profile[ahead]))

    def command(self, state: GroundTruthState) -> Controls:
        if state.time < STANDSTILL_PREFIX:
            return Controls()
        if self.step_count % self.steps_per_update == 0:
            self._update(state)
        self.step_count += 1
        return Controls(self.steering, self.speed.torques(state, self.v_target))


DRIVERS = {
    "standstill": StandstillDriver,
    "launch": LaunchDriver,
    "slalom": SlalomDriver,
    "high_slip_corner": HighSlipCornerDriver,
    "track_lap": TrackLapDriver,
    "imu_freeze_lap": TrackLapDriver,
}


def _child_seeds(seed: int) -> Tuple[int, int]:
    """Independent seeds for the bias draw and the noise draw."""
    children = np.random.SeedSequence(seed).spawn(2)
    return tuple(int(c.generate_state(1)[0]) for c in children)  # type: ignore[return-value]


def build_plan(spec: ScenarioSpec, plan: Optional[SensorFaultPlan] = None) -> SensorFaultPlan:
    """Fault plan for a run: surface-scaled noise, default biases, scenario faults."""
    bias_seed, _ = _child_seeds(spec.seed)
    if plan is None:
        plan = SensorFaultPlan.randomized(bias_seed) if spec.randomize_bias else SensorFaultPlan()
    surface = SURFACES[spec.surface]
    update: Dict[str, Any] = {"noise_sigmas": plan.noise_sigmas.scaled(surface.noise_scale)}
    if spec.name == "imu_freeze_lap" and plan.freeze_time("imu2") is None:
        event = FreezeEvent(sensor_id="imu2", t_start=spec.resolved_duration() / 2.0)
        update["freeze_events"] = [*plan.freeze_events, event]
    plan = plan.model_copy(update=update)
    plan.check_duration(spec.resolved_duration())
    return plan


def simulate(
    spec: ScenarioSpec,
    params: Optional[VehicleParams] = None,
    plan: Optional[SensorFaultPlan] = None,
) -> ScenarioResult:
    """
    Drive a scenario and synthesize its sensors.

    Args:
        spec: Scenario name, duration, seed and surface
        params: Vehicle parameters (surface grip is applied on top)
        plan: Fault plan; by default biases are drawn from the seed

    Returns:
        ScenarioResult with the 200 Hz trajectory and the raw stream

    Raises:
        ValueError: If the scenario name is unknown
        ScenarioUnreachableError: If the target condition is not met
    """
    if spec.name not in DRIVERS:
        raise ValueError(f"Unknown scenario: {spec.name} (expected one of {SCENARIOS})")

    duration = spec.resolved_duration()
    params = (params or VehicleParams()).with_surface(spec.surface)
    plan = build_plan(spec, plan)
    _, noise_seed = _child_seeds(spec.seed)

    driver = DRIVERS[spec.name](params, plan, duration)
    model = TwoTrackModel(params)
    steps_per_frame = int(round(1.0 / (OUTPUT_RATE * SIM_DT)))
    n_frames = int(round(duration * OUTPUT_RATE))

    with log_performance(f"scenario {spec.name} (seed {spec.seed}, {spec.surface})", logger):
        state = driver.initial_state()
        trajectory = [state]
        for k in range(1, n_frames + 1):
            for _ in range(steps_per_frame):
                state = model.step(state, driver.command(state), SIM_DT)
            # Pin the frame clock to k/rate, the integrator accumulates rounding
            state = with_time(state, k / OUTPUT_RATE)
            trajectory.append(state)

        summary = driver.check(trajectory, model)
        stream = synthesize_sensors(trajectory, plan, noise_seed)

    logger.info(f"Scenario {spec.name} done: {len(trajectory)} frames, {summary}")
    return ScenarioResult(spec, params, plan, trajectory, stream, summary)


def run_scenario(
    name: str,
    duration: Optional[float] = None,
    seed: int = 0,
    surface: SurfaceName = "flat",
    **kwargs: Any,
) -> Tuple[List[GroundTruthState], RawSensorStream]:
    """Run a named scenario, returning ``(trajectory, stream)``."""
    spec = ScenarioSpec(name=name, duration=duration, seed=seed, surface=surface,
                        randomize_bias=kwargs.pop("randomize_bias", True))
    result = simulate(spec, **kwargs)
    return result.trajectory, result.stream


def simulate_suite(
    specs: Sequence[ScenarioSpec],
    max_workers: Optional[int] = None,
    params: Optional[VehicleParams] = None,
) -> List[ScenarioResult]:
    """Run independent scenarios, in parallel when ``max_workers > 1``."""
    max_workers = max_workers or settings.MAX_WORKERS
    if max_workers <= 1 or len(specs) <= 1:
        return [simulate(spec, params) for spec in specs]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(simulate, specs, [params] * len(specs)))
