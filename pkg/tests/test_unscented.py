import numpy as np
import pytest

from velocity_estimation.core.exceptions import CovarianceNotPDError, GateRejectedError
from velocity_estimation.filters.unscented import (
    matrix_sqrt,
    sigma_points,
    sigma_weights,
    unscented_transform,
    unscented_update,
)


@pytest.mark.parametrize("alpha,beta,kappa", [(0.1, 2.0, 0.0), (1.0, 0.0, 1.0), (0.5, 2.0, 3.0)])
def test_mean_weights_sum_to_one(alpha, beta, kappa):
    w_mean, w_cov, lam = sigma_weights(5, alpha, beta, kappa)
    assert len(w_mean) == len(w_cov) == 11
    assert w_mean.sum() == pytest.approx(1.0)
    assert w_cov[0] == pytest.approx(w_mean[0] + 1.0 - alpha ** 2 + beta)
    assert lam == pytest.approx(alpha ** 2 * (5 + kappa) - 5)


def test_sigma_points_reproduce_mean_and_covariance():
    mean = np.array([1.0, -2.0, 0.5])
    cov = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 0.5]])
    points, w_mean, w_cov = sigma_points(mean, cov, 0.1, 2.0, 0.0)
    np.testing.assert_allclose(w_mean @ points, mean, atol=1e-10)
    dx = points - mean
    np.testing.assert_allclose((w_mean[:, None] * dx).T @ dx, cov, atol=1e-9)


def test_transform_is_exact_for_affine_maps():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(2, 4))
    b = np.array([0.5, -1.0])
    mean = rng.normal(size=4)
    a = rng.normal(size=(4, 4))
    cov = a @ a.T + 0.1 * np.eye(4)
    y_mean, y_cov, cross = unscented_transform(mean, cov, lambda x: A @ x + b)
    np.testing.assert_allclose(y_mean, A @ mean + b, atol=1e-9)
    np.testing.assert_allclose(y_cov, A @ cov @ A.T, atol=1e-9)
    np.testing.assert_allclose(cross, cov @ A.T, atol=1e-9)


def test_matrix_sqrt_handles_singular_and_rejects_indefinite():
    singular = np.diag([1.0, 0.0, 4.0])
    root = matrix_sqrt(singular)
    np.testing.assert_allclose(root @ root.T, singular, atol=1e-12)
    with pytest.raises(CovarianceNotPDError):
        matrix_sqrt(np.diag([1.0, -1.0]))


def test_update_gate_rejects_outlier():
    mean = np.zeros(2)
    cov = np.eye(2)
    with pytest.raises(GateRejectedError) as excinfo:
        unscented_update(mean, cov, np.array([10.0, 10.0]), lambda x: x, np.eye(2),
                         0.1, 2.0, 0.0, gate_threshold=9.21, channel="ext_velocity")
    assert excinfo.value.channel == "ext_velocity"


def test_update_returns_distance():
    _, cov, d2 = unscented_update(np.zeros(2), np.eye(2), np.array([2.0, 0.0]), lambda x: x,
                                  np.eye(2), 0.1, 2.0, 0.0)
    assert d2 == pytest.approx(2.0)
    np.testing.assert_allclose(cov, 0.5 * np.eye(2), atol=1e-9)
