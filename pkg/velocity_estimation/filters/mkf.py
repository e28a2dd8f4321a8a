"""Mixed Kalman filter.

The mean and covariance are propagated with an EKF step of the planar
kinematic model; IMU channels are fused with linear updates and the
velocity measurements (minimum-slip wheel, external sensor) with
unscented updates. IMU biases are calibrated at standstill and
subtracted, so the state stays [vx, vy, yaw_rate, ax, ay].
"""
from __future__ import annotations

from collections import Counter
from dataclasses import replace
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from velocity_estimation.core.config import EstimatorMode, settings
from velocity_estimation.core.exceptions import (
    CovarianceNotPDError,
    GateRejectedError,
    WindowTooShortError,
)
from velocity_estimation.data.frames import (
    EXT_COLUMNS,
    WHEEL_TORQUE_COLUMNS,
    FrameInput,
    as_frame_table,
    has_external_velocity,
)
from velocity_estimation.filters.state import (
    AX,
    AY,
    N_STATES,
    VX,
    VY,
    YAW_RATE,
    FilterState,
    ImuBiases,
    MkfConfig,
    NoiseConfig,
    WheelObservation,
)
from velocity_estimation.filters.unscented import mahalanobis_sq, unscented_update
from velocity_estimation.sim.params import WHEEL_NAMES, VehicleParams
from velocity_estimation.sim.sensors import CHANNEL_GROUPS
from velocity_estimation.sim.tire import slip_ratio_from_torque
from velocity_estimation.utils.logging import get_logger, log_performance, log_run_summary

logger = get_logger(__name__)

MAX_PROPAGATION_STEP = 0.02
IMU_ROWS = (AX, AY, YAW_RATE)
SrMap = Callable[[np.ndarray], np.ndarray]


# -- propagation -------------------------------------------------------------

def propagate_mean(mean: np.ndarray, dt: float) -> np.ndarray:
    """Euler step of v' = a + [vy·r, −vx·r], r' = 0, a' = 0."""
    vx, vy, r, ax, ay = mean
    out = mean.copy()
    out[VX] = vx + dt * (ax + vy * r)
    out[VY] = vy + dt * (ay - vx * r)
    return out


def propagation_jacobian(mean: np.ndarray, dt: float) -> np.ndarray:
    """Analytic Jacobian of :func:`propagate_mean`."""
    vx, vy, r, _, _ = mean
    F = np.eye(N_STATES)
    F[VX, VY] = dt * r
    F[VX, YAW_RATE] = dt * vy
    F[VX, AX] = dt
    F[VY, VX] = -dt * r
    F[VY, YAW_RATE] = -dt * vx
    F[VY, AY] = dt
    return F


def check_covariance(cov: np.ndarray) -> np.ndarray:
    """Symmetrize and verify positive definiteness by Cholesky factorization."""
    cov = 0.5 * (cov + cov.T)
    try:
        linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as e:
        raise CovarianceNotPDError("Covariance lost positive definiteness") from e
    return cov


def ekf_propagate(fs: FilterState, dt: float, noise: NoiseConfig) -> FilterState:
    """
    Advance mean and covariance by ``dt``.

    Raises:
        ValueError: If dt is outside (0, 0.02]
        CovarianceNotPDError: If the propagated covariance is not PD
    """
    if not 0.0 < dt <= MAX_PROPAGATION_STEP:
        raise ValueError(f"dt must be in (0, {MAX_PROPAGATION_STEP}], got {dt}")
    F = propagation_jacobian(fs.mean, dt)
    cov = F @ fs.covariance @ F.T + np.diag(noise.process_psd()) * dt
    return replace(fs, mean=propagate_mean(fs.mean, dt), covariance=check_covariance(cov),
                   time=fs.time + dt)


# -- IMU update ----------------------------------------------------------------

def lkf_update_imu(
    fs: FilterState,
    imu_id: int,
    accel: Sequence[float],
    gyro: float,
    noise: NoiseConfig,
    inflation: float = 1.0,
) -> FilterState:
    """
    Linear update with (ax, ay, yaw_rate) from one IMU, biases removed.

    Raises:
        GateRejectedError: If the innovation fails the gate (state unchanged)
    """
    z = np.array([accel[0], accel[1], gyro], dtype=float)
    z = z - np.array([fs.accel_bias[imu_id, 0], fs.accel_bias[imu_id, 1], fs.gyro_bias[imu_id]])

    H = np.zeros((3, N_STATES))
    for row, col in enumerate(IMU_ROWS):
        H[row, col] = 1.0
    R = np.diag([noise.accel_var, noise.accel_var, noise.gyro_var]) * inflation

    P = fs.covariance
    innovation = z - H @ fs.mean
    S = H @ P @ H.T + R
    if noise.gate_enabled:
        d2 = mahalanobis_sq(innovation, S)
        threshold = noise.gate_threshold(3)
        if d2 > threshold:
            raise GateRejectedError(f"imu{imu_id + 1}", d2, threshold)

    K = linalg.solve(S, H @ P, assume_a="pos").T
    I_KH = np.eye(N_STATES) - K @ H
    cov = I_KH @ P @ I_KH.T + K @ R @ K.T
    return replace(fs, mean=fs.mean + K @ innovation, covariance=0.5 * (cov + cov.T))


# -- velocity updates ----------------------------------------------------------

def default_sr_map(gain: float = 0.001, sr_max: float = 0.2) -> SrMap:
    return partial(slip_ratio_from_torque, gain=gain, sr_max=sr_max)


def wheel_velocity(obs: WheelObservation, i: int, sr_map: SrMap = slip_ratio_from_torque) -> Tuple[float, float]:
    """Car-frame velocity of wheel ``i`` from its speed, torque and steering."""
    if not 0 <= i < len(obs.omega):
        raise IndexError(f"wheel index {i} out of range")
    delta = obs.steering if i < 2 else 0.0
    speed = obs.omega[i] * obs.radii[i] / (float(sr_map(obs.torque[i])) + 1.0)
    return float(np.cos(delta) * speed), float(np.sin(delta) * speed)


def select_min_slip_wheel(obs: WheelObservation, sr_map: SrMap = slip_ratio_from_torque) -> int:
    """Wheel with the smallest |SR(T)|, lowest index on ties."""
    return int(np.argmin(np.abs(np.asarray(sr_map(np.asarray(obs.torque, dtype=float))))))


def rigid_body_velocity(mean: np.ndarray, offset: Sequence[float]) -> np.ndarray:
    """Velocity of a point at ``offset`` on the car: v + [−r·py, r·px]."""
    px, py = offset
    return np.array([mean[VX] - mean[YAW_RATE] * py, mean[VY] + mean[YAW_RATE] * px])


def _velocity_update(fs: FilterState, z: np.ndarray, offset: Sequence[float], variance: float,
                     noise: NoiseConfig, channel: str) -> FilterState:
    threshold = noise.gate_threshold(2) if noise.gate_enabled else np.inf
    mean, cov, _ = unscented_update(
        fs.mean, fs.covariance, z,
        lambda x: rigid_body_velocity(x, offset),
        np.eye(2) * variance,
        noise.alpha, noise.beta, noise.kappa,
        gate_threshold=threshold, channel=channel,
    )
    return replace(fs, mean=mean, covariance=cov)


def ukf_update_velocity(
    fs: FilterState,
    obs: WheelObservation,
    noise: NoiseConfig,
    sr_map: SrMap = slip_ratio_from_torque,
    inflation: float = 1.0,
) -> FilterState:
    """
    Fuse the velocity of the minimum-slip wheel.

    Raises:
        GateRejectedError: If the wheel velocity fails the gate
    """
    i = select_min_slip_wheel(obs, sr_map)
    z = np.array(wheel_velocity(obs, i, sr_map))
    return _velocity_update(fs, z, obs.positions[i], noise.wheel_var * inflation, noise,
                            channel=f"wheel_{WHEEL_NAMES[i]}")


def ukf_update_external_velocity(
    fs: FilterState,
    v_meas: Sequence[float],
    offset: Sequence[float],
    noise: NoiseConfig,
    inflation: float = 1.0,
) -> FilterState:
    """Fuse an external velocity sensor mounted at ``offset``."""
    return _velocity_update(fs, np.asarray(v_meas, dtype=float), offset, noise.ext_var * inflation,
                            noise, channel="ext_velocity")


# -- calibration ---------------------------------------------------------------

def calibrate_standstill(frames: FrameInput, window: float = 1.0) -> ImuBiases:
    """
    Mean of each IMU channel over the first ``window`` seconds.

    Raises:
        WindowTooShortError: If ``window`` < 1 s or the frames cover less
    """
    if window < 1.0:
        raise WindowTooShortError(f"Calibration window must be at least 1 s, got {window}")
    table = as_frame_table(frames)
    if table.empty:
        raise WindowTooShortError("No frames in the calibration window")
    t = table["t"].to_numpy()
    dt = float(np.median(np.diff(t))) if len(t) > 1 else 0.0
    covered = t[-1] - t[0] + dt
    if covered < window - 1e-9:
        raise WindowTooShortError(f"Frames cover {covered:.3f}s, calibration needs {window}s")
    in_window = table[t < t[0] + window - 1e-9]
    means = in_window[["imu1_ax", "imu1_ay", "imu1_gz", "imu2_ax", "imu2_ay", "imu2_gz"]].mean().to_numpy()
    return ImuBiases(accel=np.array([[means[0], means[1]], [means[3], means[4]]]),
                     gyro=np.array([means[2], means[5]]))


# -- filter runs ---------------------------------------------------------------

def hold_factors(rate: Optional[float] = None) -> Dict[str, float]:
    """Frame rate over native rate per sensor group."""
    rate = rate or settings.FRAME_RATE_HZ
    return {group: max(rate / native, 1.0) for group, (native, _) in CHANNEL_GROUPS.items()}


class MixedKalmanFilter:
    """
    Stateful per-frame filter cycle (propagate, then every applicable update).

    Counts gate rejections and stale skips per channel for the run summary.
    """

    def __init__(
        self,
        config: Optional[MkfConfig] = None,
        params: Optional[VehicleParams] = None,
        mode: Optional[EstimatorMode] = None,
    ) -> None:
        self.config = config or MkfConfig()
        self.params = params or VehicleParams()
        self.mode = mode or self.config.mode
        self.noise = self.config.noise
        self.sr_map = default_sr_map(self.config.sr_gain, self.config.sr_max)
        self.inflation = hold_factors()
        self.positions = self.params.positions
        self.radii = self.params.radii
        self.reset()

    def reset(self, biases: Optional[ImuBiases] = None, time: float = 0.0) -> None:
        self.state = FilterState.initial(self.config.p0_diag(), time=time)
        if biases is not None:
            self.state = self.state.with_biases(biases)
        self.counters: Counter = Counter()
        self._last_values: Dict[str, Tuple[float, ...]] = {}
        self._last_change: Dict[str, float] = {}
        self._started = False

    def is_stale(self, channel: str, values: Tuple[float, ...], t: float) -> bool:
        """True once a channel has repeated the identical value for longer than the timeout."""
        if self._last_values.get(channel) != values:
            self._last_values[channel] = values
            self._last_change[channel] = t
            return False
        return t - self._last_change[channel] > self.config.stale_timeout

    def _try(self, channel: str, update: Callable[[], FilterState]) -> None:
        try:
            self.state = update()
        except GateRejectedError as e:
            self.counters[f"rejected_{channel}"] += 1
            logger.debug(str(e))

    def step(self, row: Dict[str, float]) -> FilterState:
        """Process one synchronized frame given as a column -> value mapping."""
        t = float(row["t"])
        if self._started:
            self.state = ekf_propagate(self.state, t - self.state.time, self.noise)
        else:
            self.state = replace(self.state, time=t)
            self._started = True

        for imu_id, group in enumerate(("imu1", "imu2")):
            values = (row[f"{group}_ax"], row[f"{group}_ay"], row[f"{group}_gz"])
            if self.is_stale(group, values, t):
                self.counters[f"stale_{group}"] += 1
                continue
            self._try(group, lambda: lkf_update_imu(
                self.state, imu_id, values[:2], values[2], self.noise, self.inflation[group]))

        if all(c in row for c in WHEEL_TORQUE_COLUMNS):
            torque = np.array([row[c] for c in WHEEL_TORQUE_COLUMNS])
        else:
            torque = np.repeat([row["tq_f"] / 2.0, row["tq_r"] / 2.0], 2)
        obs = WheelObservation(
            omega=np.array([row["w_fl"], row["w_fr"], row["w_rl"], row["w_rr"]]),
            torque=torque,
            steering=float(row["steer"]),
            positions=self.positions,
            radii=self.radii,
        )
        self._try("wheels", lambda: ukf_update_velocity(
            self.state, obs, self.noise, self.sr_map, self.inflation["wheels"]))

        if self.mode == "reference" and all(c in row for c in EXT_COLUMNS):
            values = (row["ext_vx"], row["ext_vy"])
            if self.is_stale("ext_velocity", values, t):
                self.counters["stale_ext_velocity"] += 1
            else:
                self._try("ext_velocity", lambda: ukf_update_external_velocity(
                    self.state, values, self.config.ext_offset, self.noise,
                    self.inflation["ext_velocity"]))
        return self.state

    def run(self, frames: FrameInput) -> List[FilterState]:
        """Calibrate on the standstill prefix, then filter every frame."""
        table = as_frame_table(frames)
        if self.mode == "reference" and not has_external_velocity(table):
            logger.warning("Reference mode without external velocity channels, running as baseline")
        biases = calibrate_standstill(table, self.config.calibration_window)
        self.reset(biases, time=float(table["t"].iloc[0]))

        states = []
        with log_performance(f"MKF {self.mode} run over {len(table)} frames", logger):
            for row in table.to_dict(orient="records"):
                states.append(self.step(row))
        log_run_summary(logger, f"MKF {self.mode}", dict(self.counters) or {"rejected": 0})
        return states


def run_filter(
    frames: FrameInput,
    mode: EstimatorMode = "reference",
    config: Optional[MkfConfig] = None,
    params: Optional[VehicleParams] = None,
) -> List[FilterState]:
    """
    Run the mixed Kalman filter over synchronized frames.

    Args:
        frames: 200 Hz frames with a standstill prefix
        mode: ``reference`` also fuses the external velocity channels
        config: Filter configuration
        params: Vehicle geometry for the wheel velocity measurement

    Returns:
        One FilterState per frame

    Raises:
        CovarianceNotPDError: If the covariance diverges
        WindowTooShortError: If the stream is shorter than the calibration window
    """
    return MixedKalmanFilter(config, params, mode).run(frames)
