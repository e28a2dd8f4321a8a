import numpy as np
import pandas as pd
import pytest

from velocity_estimation.core.exceptions import LengthMismatchError
from velocity_estimation.data.sync import zero_order_hold_sync
from velocity_estimation.evaluation.track import TRACK_COLUMNS, error_along_track, write_track_error
from velocity_estimation.filters.io import estimates_to_frame
from velocity_estimation.filters.mkf import run_filter
from velocity_estimation.sim.io import trajectory_to_frame
from velocity_estimation.sim.scenarios import run_scenario


def circle_truth(n):
    angle = np.linspace(0.0, 2.0 * np.pi, n)
    return pd.DataFrame({"x": 20.0 * np.cos(angle), "y": 20.0 * np.sin(angle), "vy": 0.3 * np.sin(angle)})


def test_error_is_absolute_and_skips_warmup():
    truth = circle_truth(10)
    estimate = truth["vy"].to_numpy() + np.where(np.arange(10) % 2, 0.2, -0.2)
    table = error_along_track(estimate, truth, warmup=4)
    assert list(table.columns) == TRACK_COLUMNS
    assert len(table) == 6
    np.testing.assert_allclose(table["vy_abs_error"], 0.2)
    np.testing.assert_allclose(table["x"], truth["x"].iloc[4:])


def test_misaligned_inputs_raise():
    with pytest.raises(LengthMismatchError):
        error_along_track(np.zeros(9), circle_truth(10), warmup=0)


def test_write_track_error(tmp_path):
    table = error_along_track(np.zeros(50), circle_truth(50), warmup=0)
    path = write_track_error(table, tmp_path / "track" / "run.csv", plot=False)
    assert pd.read_csv(path).shape == (50, 3)
    assert not path.with_suffix(".png").exists()


def test_write_track_error_plot(tmp_path):
    pytest.importorskip("matplotlib")
    table = error_along_track(np.zeros(50), circle_truth(50), warmup=0)
    path = write_track_error(table, tmp_path / "run.csv")
    assert path.with_suffix(".png").exists()


def test_baseline_error_peaks_in_a_corner():
    trajectory, stream = run_scenario("track_lap", duration=40.0, seed=3)
    frames = zero_order_hold_sync(stream)
    truth = trajectory_to_frame(trajectory).iloc[:len(frames)].reset_index(drop=True)
    vy = estimates_to_frame(run_filter(frames, "baseline"))["vy"].to_numpy()
    table = error_along_track(vy, truth, warmup=200)
    error = table["vy_abs_error"].to_numpy()
    yaw = np.abs(truth["yaw_rate"].to_numpy()[200:])

    # peak error sits in a corner or within 1 s after leaving one
    peak = int(np.argmax(error))
    assert yaw[max(peak - 200, 0):peak + 1].max() >= 0.5 * yaw.max()
    assert error[yaw >= 0.5 * yaw.max()].mean() > error[yaw < 0.1 * yaw.max()].mean()
