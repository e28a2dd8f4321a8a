import numpy as np
import pytest

from velocity_estimation.core.exceptions import MissingChannelError
from velocity_estimation.data.frames import TARGET_COLUMNS
from velocity_estimation.data.targets import gaussian_kernel, gaussian_smooth, generate_target
from tests.conftest import make_frames


def test_constant_sequence_is_preserved():
    values = np.full(500, 3.25)
    np.testing.assert_allclose(gaussian_smooth(values, 0.05, 0.005), values)


def test_impulse_response_matches_normalized_gaussian():
    sigma, dt = 0.05, 0.005
    values = np.zeros(401)
    values[200] = 1.0
    out = gaussian_smooth(values, sigma, dt)

    k = np.arange(-30, 31)
    weights = np.exp(-0.5 * (k * dt / sigma) ** 2)
    weights /= weights.sum()
    np.testing.assert_allclose(out[170:231], weights, atol=1e-15)
    assert out[200] == pytest.approx(weights[30])
    assert out[:170].sum() == 0.0


def test_kernel_is_symmetric_and_normalized():
    kernel = gaussian_kernel(0.05, 0.005)
    assert len(kernel) == 61
    assert kernel.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(kernel, kernel[::-1])


def test_smoothing_is_zero_phase():
    t = np.arange(2000) * 0.005
    values = np.sin(2 * np.pi * 0.5 * t)
    out = gaussian_smooth(values, 0.05, 0.005)
    middle = slice(300, 700)
    peak_in = np.argmax(values[middle])
    peak_out = np.argmax(out[middle])
    assert peak_in == peak_out


def test_smooth_columns_independently():
    values = np.column_stack([np.ones(300), np.arange(300, dtype=float)])
    out = gaussian_smooth(values, 0.05, 0.005)
    np.testing.assert_allclose(out[:, 0], 1.0)
    np.testing.assert_allclose(out[100:200, 1], np.arange(100, 200), atol=1e-9)


def test_invalid_kernel_parameters():
    with pytest.raises(ValueError):
        gaussian_kernel(0.0, 0.005)


def test_generate_target_aligns_with_frames():
    frames = make_frames(400)
    targets = generate_target(frames)
    assert list(targets.columns) == ["t", *TARGET_COLUMNS]
    np.testing.assert_array_equal(targets["t"], frames["t"])
    np.testing.assert_allclose(targets[TARGET_COLUMNS].to_numpy(), 0.0, atol=1e-9)


def test_generate_target_needs_external_velocity():
    with pytest.raises(MissingChannelError):
        generate_target(make_frames(400, with_ext=False))
