"""Elementwise activations used by the GRU and its output path."""
from __future__ import annotations

from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

DEFAULT_SLOPE = 0.01


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def leaky_relu(x: ArrayLike, slope: float = DEFAULT_SLOPE) -> ArrayLike:
    """x for x >= 0, slope·x otherwise."""
    out = np.where(np.asarray(x) >= 0, x, slope * np.asarray(x))
    if np.ndim(out) == 0:
        return float(out)
    return out


def leaky_relu_grad(x: np.ndarray, slope: float = DEFAULT_SLOPE) -> np.ndarray:
    return np.where(np.asarray(x) >= 0, 1.0, slope)
