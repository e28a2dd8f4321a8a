"""Tire force models.

The four-coefficient magic formula is used for both the longitudinal and
the lateral direction, with separate coefficient sets and no combined-slip
weighting. The slip ratio map used by the filter is a clamped linear
function of wheel torque, valid under low slip.
"""
from __future__ import annotations

from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

DEFAULT_SR_GAIN = 0.001  # 50 N·m -> slip ratio 0.05
DEFAULT_SR_MAX = 0.2


def magic_formula(slip: ArrayLike, B: float, C: float, D: float, E: float) -> ArrayLike:
    """
    Evaluate D·sin(C·atan(B·s − E·(B·s − atan(B·s)))).

    Args:
        slip: Slip ratio (longitudinal) or slip angle in rad (lateral)
        B, C, D, E: Stiffness, shape, peak and curvature coefficients

    Returns:
        Force in the units of ``D`` (odd in ``slip``)
    """
    bs = B * np.asarray(slip, dtype=float)
    force = D * np.sin(C * np.arctan(bs - E * (bs - np.arctan(bs))))
    if np.ndim(force) == 0:
        return float(force)
    return force


def magic_formula_slope(slip: ArrayLike, B: float, C: float, D: float, E: float) -> ArrayLike:
    """Analytic derivative of :func:`magic_formula` with respect to slip."""
    s = np.asarray(slip, dtype=float)
    bs = B * s
    inner = bs - E * (bs - np.arctan(bs))
    d_inner = B * (1.0 - E) + E * B / (1.0 + bs * bs)
    slope = D * np.cos(C * np.arctan(inner)) * C * d_inner / (1.0 + inner * inner)
    if np.ndim(slope) == 0:
        return float(slope)
    return slope


def slip_ratio_from_torque(
    torque: ArrayLike,
    gain: float = DEFAULT_SR_GAIN,
    sr_max: float = DEFAULT_SR_MAX,
) -> ArrayLike:
    """
    Map wheel torque to slip ratio under low slip conditions.

    Args:
        torque: Wheel torque in N·m
        gain: Slip ratio per N·m
        sr_max: Symmetric clamp on the returned slip ratio

    Returns:
        clamp(gain·torque, −sr_max, +sr_max)
    """
    sr = np.clip(gain * np.asarray(torque, dtype=float), -sr_max, sr_max)
    if np.ndim(sr) == 0:
        return float(sr)
    return sr
