import numpy as np
import pandas as pd
import pytest

from velocity_estimation.core.exceptions import LeadingGapError, MissingChannelError
from velocity_estimation.data.frames import frame_columns
from velocity_estimation.data.sync import tick_grid, zero_order_hold_sync, zoh_resample
from velocity_estimation.sim.sensors import CHANNEL_GROUPS, RawSensorStream


def crafted_stream(seconds=1.0, with_ext=False, start=0.0):
    stream = RawSensorStream()
    for group, (rate, names) in CHANNEL_GROUPS.items():
        if group == "ext_velocity" and not with_ext:
            continue
        t = np.arange(int(round(seconds * rate)) + 1) / rate
        table = pd.DataFrame({"t": t + (start if group == "imu2" else 0.0)})
        for j, name in enumerate(names):
            table[name] = np.arange(len(t)) * 10.0 + j
        stream.groups[group] = table
        stream.rates[group] = rate
    return stream


def test_hold_semantics_on_100hz_channel():
    out = zoh_resample(np.array([0.0, 0.01]), np.array([1.0, 2.0]), tick_grid(0.01, 200.0))
    np.testing.assert_array_equal(out, [1.0, 1.0, 2.0])


def test_200hz_channel_passes_through():
    t = np.arange(201) / 200.0
    values = np.random.default_rng(0).normal(size=201)
    out = zoh_resample(t, values, tick_grid(1.0, 200.0))
    np.testing.assert_array_equal(out, values)


def test_sync_produces_frame_grid():
    frames = zero_order_hold_sync(crafted_stream())
    assert list(frames.columns) == frame_columns(False)
    assert len(frames) == 201
    np.testing.assert_allclose(np.diff(frames["t"]), 0.005)


def test_sync_holds_each_group_exactly():
    frames = zero_order_hold_sync(crafted_stream())
    t = frames["t"].to_numpy()
    # 125 Hz: sample k at k/125 is held until the next one arrives
    expected_imu2 = np.floor(t * 125.0 + 1e-9) * 10.0
    np.testing.assert_array_equal(frames["imu2_ax"].to_numpy(), expected_imu2)
    expected_wheel = np.floor(t * 100.0 + 1e-9) * 10.0
    np.testing.assert_array_equal(frames["w_fl"].to_numpy(), expected_wheel)
    np.testing.assert_array_equal(frames["imu1_gz"].to_numpy(), np.arange(201) * 10.0 + 2)


def test_axle_torques_are_wheel_sums():
    frames = zero_order_hold_sync(crafted_stream())
    np.testing.assert_allclose(frames["tq_f"], frames["tq_fl"] + frames["tq_fr"])
    np.testing.assert_allclose(frames["tq_r"], frames["tq_rl"] + frames["tq_rr"])


def test_external_velocity_is_kept_when_present():
    frames = zero_order_hold_sync(crafted_stream(with_ext=True))
    assert list(frames.columns) == frame_columns(True)


def test_leading_gap_raises():
    with pytest.raises(LeadingGapError):
        zero_order_hold_sync(crafted_stream(start=0.02))


def test_missing_group_raises():
    stream = crafted_stream()
    del stream.groups["wheels"]
    with pytest.raises(MissingChannelError):
        zero_order_hold_sync(stream)


def test_non_monotonic_timestamps_raise():
    with pytest.raises(ValueError):
        zoh_resample(np.array([0.0, 0.02, 0.01]), np.zeros(3), tick_grid(0.02, 200.0))
