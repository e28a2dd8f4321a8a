"""Overlapping training windows cut from aligned datasets."""
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from velocity_estimation.data.frames import N_INPUTS, N_OUTPUTS, Dataset
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.utils.logging import get_logger

logger = get_logger(__name__)


def window_starts(length: int, window: int, stride: int) -> np.ndarray:
    if length < window:
        return np.zeros(0, dtype=int)
    return np.arange(0, length - window + 1, stride)


def build_windows(
    datasets: Sequence[Dataset],
    norm: NormStats,
    input_steps: int = 300,
    output_steps: int = 200,
    stride: int = 100,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cut normalized windows of ``input_steps + output_steps`` frames.

    Windows never cross dataset boundaries; datasets shorter than one
    window are skipped.

    Returns:
        (inputs, targets) with shapes (N, T, 13) and (N, T, 5)
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    window = input_steps + output_steps
    xs, ys = [], []
    for dataset in datasets:
        starts = window_starts(len(dataset), window, stride)
        if starts.size == 0:
            logger.warning(f"{dataset.name}: {len(dataset)} frames, shorter than one window ({window})")
            continue
        x = norm.normalize_inputs(dataset.inputs())
        y = norm.normalize_outputs(dataset.target_values())
        xs.extend(x[s:s + window] for s in starts)
        ys.extend(y[s:s + window] for s in starts)
    if not xs:
        return np.zeros((0, window, N_INPUTS)), np.zeros((0, window, N_OUTPUTS))
    return np.stack(xs), np.stack(ys)
