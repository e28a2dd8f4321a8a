"""
Targeted maneuvers with pass/fail criteria.

Each case simulates its scenario, runs the network and the filter on the
synchronized frames, and judges the estimates against simulator ground
truth after the warm-up.

    bias_calibration  standstill with injected accel bias; network accel mean stays near 0
    launch            traction-limited launch; network vx error within 2x the reference filter
    high_slip         corner driven to large rear sideslip; network vy error under 1/3 of baseline
    outlier           IMU-2 frozen mid-lap; network and filter ay error after the freeze within 2x before
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from velocity_estimation.core.config import EstimatorMode, settings
from velocity_estimation.data.frames import INPUT_COLUMNS, TARGET_COLUMNS
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.data.sync import zero_order_hold_sync
from velocity_estimation.evaluation.metrics import rmse
from velocity_estimation.filters.mkf import run_filter
from velocity_estimation.filters.state import MkfConfig
from velocity_estimation.network.checkpoint import require_checkpoint
from velocity_estimation.network.gru import GruNetwork
from velocity_estimation.network.inference import predict_array
from velocity_estimation.sim.dynamics import rear_axle_sideslip, slip_ratios
from velocity_estimation.sim.params import SensorFaultPlan, SurfaceName
from velocity_estimation.sim.scenarios import DEFAULT_DURATIONS, ScenarioResult, ScenarioSpec, simulate
from velocity_estimation.utils.logging import get_logger, log_performance

logger = get_logger(__name__)

CASES: Tuple[str, ...] = ("bias_calibration", "launch", "high_slip", "outlier")

SCENARIO_OF = {
    "bias_calibration": "standstill",
    "launch": "launch",
    "high_slip": "high_slip_corner",
    "outlier": "imu_freeze_lap",
}

LAUNCH_SLIP_THRESHOLD = 0.05
HIGH_SLIP_SIDESLIP_DEG = 2.0


class CaseStudyConfig(BaseModel):
    """Scenario settings and acceptance thresholds of the case studies."""

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, ge=0)
    duration: Optional[float] = Field(default=None, gt=2.0)
    surface: SurfaceName = "flat"
    checkpoint: Optional[Path] = None
    warmup: int = Field(default=settings.WARMUP_FRAMES, ge=0)
    mkf_mode: EstimatorMode = "reference"
    injected_accel_bias: float = Field(default=0.2, ge=0.0)
    freeze_enabled: bool = True
    bias_accel_limit: float = Field(default=0.05, gt=0.0)
    bias_drift_limit: float = Field(default=0.01, gt=0.0)
    launch_ratio: float = Field(default=2.0, gt=0.0)
    high_slip_ratio: float = Field(default=1.0 / 3.0, gt=0.0)
    high_slip_sideslip_deg: float = Field(default=HIGH_SLIP_SIDESLIP_DEG, gt=0.0)
    outlier_ratio: float = Field(default=2.0, gt=0.0)


@dataclass
class CaseStudyResult:
    """Outcome of one case: the criterion, whether it held, and the evidence."""

    case: str
    criterion: str
    passed: bool
    summary: Dict[str, float] = field(default_factory=dict)
    series: pd.DataFrame = field(default_factory=pd.DataFrame)

    def to_dict(self) -> Dict[str, Any]:
        return {"case": self.case, "criterion": self.criterion, "passed": self.passed,
                "summary": dict(self.summary)}


@dataclass
class _CaseRun:
    result: ScenarioResult
    frames: pd.DataFrame
    truth: np.ndarray  # (T, 5) in TARGET_COLUMNS order
    network: np.ndarray
    mkf: Dict[str, np.ndarray]

    @property
    def times(self) -> np.ndarray:
        return self.frames["t"].to_numpy()


def _truth_values(result: ScenarioResult, n: int) -> np.ndarray:
    states = result.trajectory[:n]
    return np.array([[s.vx, s.vy, s.yaw_rate, s.ax, s.ay] for s in states])


def _run_case(
    case: str,
    config: CaseStudyConfig,
    net: GruNetwork,
    norm: NormStats,
    mkf_config: Optional[MkfConfig],
    modes: Tuple[EstimatorMode, ...],
    scenario: Optional[str] = None,
    plan: Optional[SensorFaultPlan] = None,
) -> _CaseRun:
    spec = ScenarioSpec(
        name=scenario or SCENARIO_OF[case],
        duration=config.duration,
        seed=config.seed,
        surface=config.surface,
        randomize_bias=plan is None and case != "bias_calibration",
    )
    result = simulate(spec, plan=plan)
    frames = zero_order_hold_sync(result.stream)
    truth = _truth_values(result, len(frames))
    frames = frames.iloc[:len(truth)].reset_index(drop=True)
    network = predict_array(net, norm, frames[INPUT_COLUMNS].to_numpy(dtype=float))
    mkf = {mode: np.array([s.mean for s in run_filter(frames, mode, mkf_config, result.params)])
           for mode in modes}
    return _CaseRun(result, frames, truth, network, mkf)


def _series(run: _CaseRun, state: str, extra: Optional[Dict[str, np.ndarray]] = None) -> pd.DataFrame:
    k = TARGET_COLUMNS.index(state)
    table = {"t": run.times, f"truth_{state}": run.truth[:, k], f"network_{state}": run.network[:, k]}
    for mode, values in run.mkf.items():
        table[f"{mode}_{state}"] = values[:, k]
    table.update(extra or {})
    return pd.DataFrame(table)


def _window_rmse(values: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> float:
    if not mask.any():
        return float("nan")
    return rmse(values[mask], truth[mask])


def _bias_calibration(config, net, norm, mkf_config) -> CaseStudyResult:
    b = config.injected_accel_bias
    plan = SensorFaultPlan(imu_bias=[(b, b, 0.0), (b, b, 0.0)])
    run = _run_case("bias_calibration", config, net, norm, mkf_config, ("reference",), plan=plan)
    w = config.warmup
    accel = run.network[w:, [TARGET_COLUMNS.index("ax"), TARGET_COLUMNS.index("ay")]].mean(axis=0)
    drift = run.mkf["reference"][w:, [TARGET_COLUMNS.index("vx"), TARGET_COLUMNS.index("vy")]].mean(axis=0)
    network_accel = float(np.max(np.abs(accel)))
    reference_drift = float(np.max(np.abs(drift)))
    passed = network_accel < config.bias_accel_limit and reference_drift < config.bias_drift_limit
    return CaseStudyResult(
        case="bias_calibration",
        criterion=(f"network |mean accel| < {config.bias_accel_limit} m/s^2 and reference filter "
                   f"|mean velocity| < {config.bias_drift_limit} m/s with {b} m/s^2 injected bias"),
        passed=passed,
        summary={"injected_bias": b, "network_accel_mean": network_accel, "reference_drift": reference_drift},
        series=_series(run, "ax"),
    )


def _launch(config, net, norm, mkf_config) -> CaseStudyResult:
    run = _run_case("launch", config, net, norm, mkf_config, ("reference", "baseline"))
    params = run.result.params
    slip = np.array([np.max(np.abs(slip_ratios(s, params))) for s in run.result.trajectory[:len(run.frames)]])
    mask = slip >= LAUNCH_SLIP_THRESHOLD
    mask[:config.warmup] = False
    k = TARGET_COLUMNS.index("vx")
    network_rmse = _window_rmse(run.network[:, k], run.truth[:, k], mask)
    reference_rmse = _window_rmse(run.mkf["reference"][:, k], run.truth[:, k], mask)
    baseline_rmse = _window_rmse(run.mkf["baseline"][:, k], run.truth[:, k], mask)
    passed = bool(mask.any()) and network_rmse <= config.launch_ratio * reference_rmse
    return CaseStudyResult(
        case="launch",
        criterion=f"network vx RMSE in the slip window <= {config.launch_ratio} x reference filter",
        passed=passed,
        summary={
            "peak_slip_ratio": float(slip.max()),
            "slip_frames": int(mask.sum()),
            "network_vx_rmse": network_rmse,
            "reference_vx_rmse": reference_rmse,
            "baseline_vx_rmse": baseline_rmse,
        },
        series=_series(run, "vx", {"slip_ratio": slip}),
    )


def _high_slip(config, net, norm, mkf_config) -> CaseStudyResult:
    run = _run_case("high_slip", config, net, norm, mkf_config, ("baseline",))
    params = run.result.params
    sideslip = np.array([rear_axle_sideslip(s, params) for s in run.result.trajectory[:len(run.frames)]])
    mask = np.abs(sideslip) >= np.deg2rad(config.high_slip_sideslip_deg)
    mask[:config.warmup] = False
    criterion = f"network vy RMSE on the maneuver <= {config.high_slip_ratio:.3f} x baseline filter"
    if not mask.any():
        note = f"no frame after warm-up reached {config.high_slip_sideslip_deg} deg rear sideslip"
        logger.warning(f"high_slip: {note}")
        criterion += f" ({note})"
    k = TARGET_COLUMNS.index("vy")
    network_rmse = _window_rmse(run.network[:, k], run.truth[:, k], mask)
    baseline_rmse = _window_rmse(run.mkf["baseline"][:, k], run.truth[:, k], mask)
    passed = bool(mask.any()) and network_rmse <= config.high_slip_ratio * baseline_rmse
    return CaseStudyResult(
        case="high_slip",
        criterion=criterion,
        passed=passed,
        summary={
            "peak_rear_sideslip_deg": float(np.rad2deg(np.max(np.abs(sideslip)))),
            "sideslip_frames": int(mask.sum()),
            "network_vy_rmse": network_rmse,
            "baseline_vy_rmse": baseline_rmse,
        },
        series=_series(run, "vy", {"rear_sideslip": sideslip}),
    )


def _outlier(config, net, norm, mkf_config) -> CaseStudyResult:
    mode = config.mkf_mode
    if config.freeze_enabled:
        run = _run_case("outlier", config, net, norm, mkf_config, (mode,))
        t_freeze = run.result.plan.freeze_time("imu2")
    else:
        run = _run_case("outlier", config, net, norm, mkf_config, (mode,), scenario="track_lap")
        t_freeze = None
    if t_freeze is None:
        t_freeze = (config.duration or DEFAULT_DURATIONS[SCENARIO_OF["outlier"]]) / 2.0

    times = run.times
    after_warmup = np.arange(len(times)) >= config.warmup
    pre = after_warmup & (times < t_freeze)
    post = after_warmup & (times >= t_freeze)
    k = TARGET_COLUMNS.index("ay")
    summary: Dict[str, float] = {"t_freeze": float(t_freeze)}
    passed = bool(pre.any() and post.any())
    for name, values in (("network", run.network), (mode, run.mkf[mode])):
        before = _window_rmse(values[:, k], run.truth[:, k], pre)
        after = _window_rmse(values[:, k], run.truth[:, k], post)
        ratio = after / before if before > 0 else float("inf")
        summary.update({f"{name}_ay_rmse_pre": before, f"{name}_ay_rmse_post": after, f"{name}_ratio": ratio})
        passed = passed and ratio <= config.outlier_ratio
    return CaseStudyResult(
        case="outlier",
        criterion=f"network and {mode} filter ay RMSE after the IMU-2 freeze <= {config.outlier_ratio} x before",
        passed=passed,
        summary=summary,
        series=_series(run, "ay"),
    )


_RUNNERS = {
    "bias_calibration": _bias_calibration,
    "launch": _launch,
    "high_slip": _high_slip,
    "outlier": _outlier,
}


def run_case_study(
    case: str,
    config: Optional[CaseStudyConfig] = None,
    net: Optional[GruNetwork] = None,
    norm: Optional[NormStats] = None,
    mkf_config: Optional[MkfConfig] = None,
) -> CaseStudyResult:
    """
    Run one case study.

    Args:
        case: One of ``CASES``
        config: Scenario settings and thresholds; ``config.checkpoint`` is
            loaded when no network is passed
        net, norm: Trained network and its normalization

    Raises:
        ValueError: If the case is unknown
        MissingCheckpointError: If no network is given and no checkpoint exists
        ScenarioUnreachableError: If the maneuver misses its target condition
    """
    if case not in _RUNNERS:
        raise ValueError(f"Unknown case {case!r}, expected one of {CASES}")
    config = config or CaseStudyConfig()
    if net is None or norm is None:
        net, norm = require_checkpoint(config.checkpoint)

    with log_performance(f"case study {case}", logger):
        result = _RUNNERS[case](config, net, norm, mkf_config)
    status = "passed" if result.passed else "FAILED"
    logger.info(f"Case {case} {status}: {result.summary}")
    return result


def run_case_studies(
    cases: Optional[List[str]] = None,
    config: Optional[CaseStudyConfig] = None,
    net: Optional[GruNetwork] = None,
    norm: Optional[NormStats] = None,
    mkf_config: Optional[MkfConfig] = None,
) -> List[CaseStudyResult]:
    config = config or CaseStudyConfig()
    if net is None or norm is None:
        net, norm = require_checkpoint(config.checkpoint)
    return [run_case_study(case, config, net, norm, mkf_config) for case in (cases or list(CASES))]
