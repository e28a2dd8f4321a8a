"""RMSE loss with a warm-up mask on the leading time steps."""
from __future__ import annotations

from typing import Tuple

import numpy as np


def _masked_error(pred: np.ndarray, target: np.ndarray, warmup: int) -> np.ndarray:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"Prediction shape {pred.shape} does not match target {target.shape}")
    steps = pred.shape[-2]
    if not 0 <= warmup < steps:
        raise ValueError(f"warmup must be in [0, {steps}), got {warmup}")
    return pred[..., warmup:, :] - target[..., warmup:, :]


def masked_rmse_loss(pred: np.ndarray, target: np.ndarray, warmup: int = 0) -> float:
    """
    RMSE over every entry with time index >= ``warmup``.

    Time is the second-to-last axis; a leading batch axis is pooled.
    """
    error = _masked_error(pred, target, warmup)
    return float(np.sqrt(np.mean(error ** 2)))


def masked_rmse_with_grad(
    pred: np.ndarray, target: np.ndarray, warmup: int = 0
) -> Tuple[float, np.ndarray]:
    """Loss and dLoss/dpred (zero inside the warm-up and when the loss is 0)."""
    error = _masked_error(pred, target, warmup)
    loss = float(np.sqrt(np.mean(error ** 2)))
    grad = np.zeros(np.shape(pred))
    if loss > 0.0:
        grad[..., warmup:, :] = error / (error.size * loss)
    return loss, grad
