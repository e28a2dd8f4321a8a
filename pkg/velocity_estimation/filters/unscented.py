"""Scaled unscented transform and the generic unscented measurement update."""
from __future__ import annotations

from typing import Callable, Tuple

import numpy as np
from scipy import linalg

from velocity_estimation.core.exceptions import CovarianceNotPDError, GateRejectedError


def sigma_weights(n: int, alpha: float, beta: float, kappa: float) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Mean and covariance weights of the scaled unscented transform.

    Returns:
        (w_mean, w_cov, lam) with 2n+1 weights each
    """
    lam = alpha ** 2 * (n + kappa) - n
    w_mean = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    w_cov = w_mean.copy()
    w_mean[0] = lam / (n + lam)
    w_cov[0] = w_mean[0] + (1.0 - alpha ** 2 + beta)
    return w_mean, w_cov, lam


def matrix_sqrt(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, or an eigen square root for singular PSD matrices."""
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        w, v = linalg.eigh(cov)
        if np.min(w) < -1e-9 * max(1.0, float(np.max(np.abs(w)))):
            raise CovarianceNotPDError(f"Covariance is not PSD (min eigenvalue {np.min(w):.3e})")
        return v * np.sqrt(np.clip(w, 0.0, None))


def sigma_points(mean: np.ndarray, cov: np.ndarray, alpha: float, beta: float,
                 kappa: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Generate 2n+1 sigma points as rows.

    Returns:
        (points, w_mean, w_cov)
    """
    n = mean.size
    w_mean, w_cov, lam = sigma_weights(n, alpha, beta, kappa)
    root = matrix_sqrt((n + lam) * cov)
    points = np.empty((2 * n + 1, n))
    points[0] = mean
    points[1:n + 1] = mean + root.T
    points[n + 1:] = mean - root.T
    return points, w_mean, w_cov


def unscented_transform(mean: np.ndarray, cov: np.ndarray, func: Callable[[np.ndarray], np.ndarray],
                        alpha: float = 0.1, beta: float = 2.0, kappa: float = 0.0):
    """
    Propagate (mean, cov) through ``func``.

    Returns:
        (y_mean, y_cov, cross_cov) where cross_cov is Cov(x, y)
    """
    points, w_mean, w_cov = sigma_points(mean, cov, alpha, beta, kappa)
    ys = np.array([func(p) for p in points])
    y_mean = w_mean @ ys
    dy = ys - y_mean
    dx = points - mean
    y_cov = (w_cov[:, None] * dy).T @ dy
    cross = (w_cov[:, None] * dx).T @ dy
    return y_mean, y_cov, cross


def mahalanobis_sq(innovation: np.ndarray, innovation_cov: np.ndarray) -> float:
    factor = linalg.cho_factor(innovation_cov, lower=True)
    return float(innovation @ linalg.cho_solve(factor, innovation))


def unscented_update(
    mean: np.ndarray,
    cov: np.ndarray,
    z: np.ndarray,
    h: Callable[[np.ndarray], np.ndarray],
    meas_cov: np.ndarray,
    alpha: float,
    beta: float,
    kappa: float,
    gate_threshold: float = np.inf,
    channel: str = "measurement",
) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Unscented Kalman measurement update with a Mahalanobis gate.

    Returns:
        (mean, cov, distance_sq)

    Raises:
        GateRejectedError: If the innovation distance exceeds ``gate_threshold``
        CovarianceNotPDError: If the innovation covariance cannot be factorized
    """
    z_hat, s_cov, cross = unscented_transform(mean, cov, h, alpha, beta, kappa)
    s_cov = s_cov + meas_cov
    innovation = np.asarray(z, dtype=float) - z_hat
    try:
        factor = linalg.cho_factor(s_cov, lower=True)
    except linalg.LinAlgError as e:
        raise CovarianceNotPDError(f"{channel}: innovation covariance not PD") from e
    d2 = float(innovation @ linalg.cho_solve(factor, innovation))
    if d2 > gate_threshold:
        raise GateRejectedError(channel, d2, gate_threshold)

    gain = linalg.cho_solve(factor, cross.T).T
    new_mean = mean + gain @ innovation
    new_cov = cov - gain @ s_cov @ gain.T
    return new_mean, 0.5 * (new_cov + new_cov.T), d2
