"""Input/output normalization statistics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from velocity_estimation.core.exceptions import DegenerateChannelError
from velocity_estimation.data.frames import INPUT_COLUMNS, TARGET_COLUMNS, Dataset
from velocity_estimation.utils.logging import get_logger

logger = get_logger(__name__)

MIN_STD = 1e-12


@dataclass(frozen=True)
class NormStats:
    """Per-channel mean and population std of inputs (13) and outputs (5)."""

    input_mean: np.ndarray
    input_std: np.ndarray
    output_mean: np.ndarray
    output_std: np.ndarray

    def normalize_inputs(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.input_mean) / self.input_std

    def normalize_outputs(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.output_mean) / self.output_std

    def denormalize_outputs(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=float) * self.output_std + self.output_mean

    def to_dict(self) -> Dict[str, List[float]]:
        return {
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "output_mean": self.output_mean.tolist(),
            "output_std": self.output_std.tolist(),
        }

    @classmethod
    def from_dict(cls, values: Dict[str, Sequence[float]]) -> "NormStats":
        return cls(**{key: np.asarray(values[key], dtype=float) for key in
                      ("input_mean", "input_std", "output_mean", "output_std")})

    @classmethod
    def identity(cls, n_inputs: int = len(INPUT_COLUMNS), n_outputs: int = len(TARGET_COLUMNS)) -> "NormStats":
        return cls(np.zeros(n_inputs), np.ones(n_inputs), np.zeros(n_outputs), np.ones(n_outputs))


def _mean_std(values: np.ndarray, names: Sequence[str]):
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    degenerate = [name for name, s in zip(names, std) if s < MIN_STD]
    if degenerate:
        raise DegenerateChannelError(f"Zero variance in channels: {degenerate}")
    return mean, std


def compute_norm_stats(train_datasets: Sequence[Dataset]) -> NormStats:
    """
    Pool every frame and target of the training split.

    Raises:
        ValueError: If no training datasets are given
        DegenerateChannelError: If a channel is constant
    """
    if not train_datasets:
        raise ValueError("compute_norm_stats needs at least one training dataset")
    inputs = np.vstack([d.inputs() for d in train_datasets])
    outputs = np.vstack([d.target_values() for d in train_datasets])
    input_mean, input_std = _mean_std(inputs, INPUT_COLUMNS)
    output_mean, output_std = _mean_std(outputs, TARGET_COLUMNS)
    logger.info(f"Norm stats from {len(train_datasets)} datasets, {len(inputs)} frames")
    return NormStats(input_mean, input_std, output_mean, output_std)
