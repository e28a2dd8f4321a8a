"""
RMSE and percent-error metrics and the estimator comparison report.

Every estimator is a callable mapping a ``Dataset`` to a (T, 5) array in
``TARGET_COLUMNS`` order. Comparison is against the smoothed reference
targets by default, or against simulator ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Literal, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from velocity_estimation.core.config import EstimatorMode, settings
from velocity_estimation.core.exceptions import LengthMismatchError, MissingChannelError, ZeroNormalizerError
from velocity_estimation.data.frames import TARGET_COLUMNS, Dataset
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.filters.mkf import run_filter
from velocity_estimation.filters.state import MkfConfig
from velocity_estimation.network.gru import GruNetwork
from velocity_estimation.network.inference import predict_array
from velocity_estimation.sim.params import VehicleParams
from velocity_estimation.utils.logging import get_logger, log_performance

logger = get_logger(__name__)

# states compared in the published results table; ax is reported but not flagged
REPORTED_STATES = ("vx", "vy", "yawrate", "ay")
GROUND_TRUTH_MAP = {"vx": "vx", "vy": "vy", "yawrate": "yaw_rate", "ax": "ax", "ay": "ay"}

Estimator = Callable[[Dataset], np.ndarray]


def rmse(pred: Sequence[float], ref: Sequence[float]) -> float:
    """
    Root mean square difference of two aligned series.

    Raises:
        LengthMismatchError: If the series differ in shape
        ValueError: If the series are empty
    """
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise LengthMismatchError(f"Series shapes differ: {pred.shape} vs {ref.shape}")
    if pred.size == 0:
        raise ValueError("rmse of empty series")
    return float(np.sqrt(np.mean((pred - ref) ** 2)))


def percent_error(rmse_value: float, normalizer: float) -> float:
    """100 · rmse / normalizer."""
    if not normalizer > 0:
        raise ZeroNormalizerError(f"Normalizer must be positive, got {normalizer}")
    return 100.0 * rmse_value / normalizer


class EvalConfig(BaseModel):
    """Comparison settings; ``norm_<state>`` pins a percent-error normalizer."""

    model_config = ConfigDict(extra="forbid")

    warmup: int = Field(default=settings.WARMUP_FRAMES, ge=0)
    reference: Literal["targets", "ground_truth"] = "targets"
    estimators: List[str] = Field(default_factory=lambda: ["baseline", "reference"])
    norm_vx: Optional[float] = Field(default=None, gt=0.0)
    norm_vy: Optional[float] = Field(default=None, gt=0.0)
    norm_yawrate: Optional[float] = Field(default=None, gt=0.0)
    norm_ax: Optional[float] = Field(default=None, gt=0.0)
    norm_ay: Optional[float] = Field(default=None, gt=0.0)

    @field_validator("estimators", mode="before")
    @classmethod
    def split_estimators(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    def normalizer_overrides(self) -> Dict[str, float]:
        return {state: getattr(self, f"norm_{state}") for state in TARGET_COLUMNS
                if getattr(self, f"norm_{state}") is not None}


@dataclass(frozen=True)
class StateMetric:
    estimator: str
    state: str
    rmse: float
    percent_error: float
    normalizer: float
    reported: bool


@dataclass
class MetricReport:
    """Pooled RMSE and percent error per estimator and state."""

    metrics: List[StateMetric]
    reference: str
    warmup: int
    n_samples: int
    datasets: List[str] = field(default_factory=list)

    def get(self, estimator: str, state: str) -> StateMetric:
        for metric in self.metrics:
            if metric.estimator == estimator and metric.state == state:
                return metric
        raise KeyError(f"No metric for {estimator}/{state}")

    @property
    def estimators(self) -> List[str]:
        return list(dict.fromkeys(m.estimator for m in self.metrics))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([m.__dict__ for m in self.metrics])

    def to_markdown(self) -> str:
        """Estimators as rows, ``rmse (%err)`` per state as columns."""
        states = list(dict.fromkeys(m.state for m in self.metrics))
        header = "| estimator | " + " | ".join(
            f"{s}{'' if s in REPORTED_STATES else ' (unreported)'}" for s in states) + " |"
        lines = [header, "|" + "---|" * (len(states) + 1)]
        for estimator in self.estimators:
            cells = []
            for state in states:
                m = self.get(estimator, state)
                pct = "n/a" if np.isnan(m.percent_error) else f"{m.percent_error:.2f}%"
                cells.append(f"{m.rmse:.3f} ({pct})")
            lines.append(f"| {estimator} | " + " | ".join(cells) + " |")
        return "\n".join(lines)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "reference": self.reference,
            "warmup": self.warmup,
            "n_samples": self.n_samples,
            "datasets": list(self.datasets),
            "metrics": [m.__dict__ for m in self.metrics],
        }


def reference_values(dataset: Dataset, reference: str = "targets") -> np.ndarray:
    """(T, 5) comparison series of a dataset."""
    if reference == "targets":
        return dataset.target_values()
    if dataset.ground_truth is None:
        raise MissingChannelError(f"{dataset.name} has no ground truth")
    columns = [GROUND_TRUTH_MAP[c] for c in TARGET_COLUMNS]
    values = dataset.ground_truth[columns].to_numpy(dtype=float)
    if len(values) != len(dataset):
        raise LengthMismatchError(f"{dataset.name}: {len(values)} ground-truth rows for {len(dataset)} frames")
    return values


def compare_estimators(
    datasets: Sequence[Dataset],
    estimators: Mapping[str, Estimator],
    config: Optional[EvalConfig] = None,
) -> MetricReport:
    """
    Pool squared errors over every dataset after the warm-up.

    The percent-error normalizer of a state is max |reference| over the
    evaluated samples unless pinned in ``config``. A state whose reference
    is zero throughout gets a NaN percent error.

    Raises:
        LengthMismatchError: If an estimator output is not aligned with its dataset
    """
    config = config or EvalConfig()
    if not datasets:
        raise ValueError("compare_estimators needs at least one dataset")
    n_states = len(TARGET_COLUMNS)
    sums = {name: np.zeros(n_states) for name in estimators}
    peak = np.zeros(n_states)
    count = 0

    with log_performance(f"comparing {list(estimators)} on {len(datasets)} datasets", logger):
        for dataset in datasets:
            ref = reference_values(dataset, config.reference)[config.warmup:]
            if len(ref) == 0:
                logger.warning(f"{dataset.name}: nothing left after {config.warmup} warm-up frames")
                continue
            peak = np.maximum(peak, np.abs(ref).max(axis=0))
            count += len(ref)
            for name, estimator in estimators.items():
                pred = np.asarray(estimator(dataset), dtype=float)[config.warmup:]
                if pred.shape != ref.shape:
                    raise LengthMismatchError(
                        f"{name} on {dataset.name}: output {pred.shape}, reference {ref.shape}"
                    )
                sums[name] += np.sum((pred - ref) ** 2, axis=0)
    if count == 0:
        raise ValueError("No samples left to compare after the warm-up")

    normalizers = dict(zip(TARGET_COLUMNS, peak))
    normalizers.update(config.normalizer_overrides())
    metrics = []
    for name in estimators:
        for k, state in enumerate(TARGET_COLUMNS):
            value = float(np.sqrt(sums[name][k] / count))
            # reference zero throughout: percent error undefined
            pct = percent_error(value, normalizers[state]) if normalizers[state] > 0 else float("nan")
            metrics.append(StateMetric(
                estimator=name,
                state=state,
                rmse=value,
                percent_error=pct,
                normalizer=float(normalizers[state]),
                reported=state in REPORTED_STATES,
            ))
    return MetricReport(metrics, config.reference, config.warmup, count, [d.name for d in datasets])


def mkf_estimator(
    mode: EstimatorMode,
    config: Optional[MkfConfig] = None,
    params: Optional[VehicleParams] = None,
) -> Estimator:
    def estimate(dataset: Dataset) -> np.ndarray:
        return np.array([s.mean for s in run_filter(dataset.frames, mode, config, params)])
    return estimate


def network_estimator(net: GruNetwork, norm: NormStats) -> Estimator:
    def estimate(dataset: Dataset) -> np.ndarray:
        return predict_array(net, norm, dataset.inputs())
    return estimate
