import numpy as np
import pytest

from velocity_estimation.core.exceptions import MissingChannelError
from velocity_estimation.sim.dynamics import GroundTruthState
from velocity_estimation.sim.params import FreezeEvent, NoiseSigmas, SensorFaultPlan, VehicleParams
from velocity_estimation.sim.sensors import CHANNEL_GROUPS, native_times, synthesize_sensors


def straight_line(vx, seconds, params=None, rate=200.0):
    params = params or VehicleParams()
    n = int(round(seconds * rate))
    return [
        GroundTruthState.rolling(vx, params, time=k / rate, x=vx * k / rate)
        for k in range(n + 1)
    ]


def test_native_times_cover_duration():
    times = native_times(125.0, 1.0)
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(1.0)
    assert len(times) == 126


def test_wheel_speed_at_zero_slip_is_speed_over_radius():
    plan = SensorFaultPlan(noise_sigmas=NoiseSigmas.zero())
    stream = synthesize_sensors(straight_line(10.0, 1.0), plan, seed=0)
    wheels = stream["wheels"]
    for column in ("w_fl", "w_fr", "w_rl", "w_rr"):
        np.testing.assert_allclose(wheels[column], 50.0)


def test_groups_are_emitted_at_native_rates():
    stream = synthesize_sensors(straight_line(5.0, 2.0), SensorFaultPlan(), seed=1)
    for group, (rate, names) in CHANNEL_GROUPS.items():
        table = stream[group]
        assert list(table.columns) == ["t", *names]
        assert len(table) == int(round(2.0 * rate)) + 1
        assert stream.rates[group] == rate
    stream.validate()


def test_imu_bias_shows_up_in_sample_mean():
    sigma = 0.05
    plan = SensorFaultPlan(
        imu_bias=[(0.2, 0.0, 0.0), (0.0, 0.0, 0.0)],
        noise_sigmas=NoiseSigmas(accel=sigma),
    )
    stream = synthesize_sensors(straight_line(0.0, 5.0), plan, seed=4)
    ax = stream["imu1"]["imu1_ax"].to_numpy()
    assert abs(ax.mean() - 0.2) <= 3 * sigma / np.sqrt(len(ax))


def test_freeze_holds_value_at_start_time():
    plan = SensorFaultPlan(freeze_events=[FreezeEvent(sensor_id="imu2", t_start=5.0)])
    stream = synthesize_sensors(straight_line(3.0, 8.0), plan, seed=2)
    imu2 = stream["imu2"]
    t = imu2["t"].to_numpy()
    held = imu2[np.isclose(t, 5.0)].iloc[0]
    after = imu2[t >= 5.0 - 1e-9]
    for column in ("imu2_ax", "imu2_ay", "imu2_gz"):
        assert np.all(after[column].to_numpy() == held[column])
    before = imu2[t < 5.0]
    assert before["imu2_ax"].nunique() > 1


def test_synthesis_is_deterministic_per_seed():
    trajectory = straight_line(8.0, 2.0)
    plan = SensorFaultPlan()
    first = synthesize_sensors(trajectory, plan, seed=11)
    second = synthesize_sensors(trajectory, plan, seed=11)
    other = synthesize_sensors(trajectory, plan, seed=12)
    for group in CHANNEL_GROUPS:
        assert first[group].equals(second[group])
    assert not first["imu1"].equals(other["imu1"])


def test_external_velocity_includes_lever_arm():
    trajectory = [
        GroundTruthState(time=k / 200.0, vx=10.0, yaw_rate=0.5, wheel_omega=np.full(4, 50.0))
        for k in range(201)
    ]
    plan = SensorFaultPlan(noise_sigmas=NoiseSigmas.zero(), ext_offset=(1.0, 0.2))
    ext = synthesize_sensors(trajectory, plan, seed=0)["ext_velocity"]
    np.testing.assert_allclose(ext["ext_vx"], 10.0 - 0.5 * 0.2)
    np.testing.assert_allclose(ext["ext_vy"], 0.5 * 1.0)


def test_missing_group_raises():
    stream = synthesize_sensors(straight_line(1.0, 0.5), SensorFaultPlan(), seed=0)
    with pytest.raises(MissingChannelError):
        stream["gps"]
    with pytest.raises(MissingChannelError):
        stream.channel("imu3_ax")
    assert list(stream.channel("w_fl").columns) == ["t", "w_fl"]


def test_fault_plan_validation():
    with pytest.raises(ValueError):
        SensorFaultPlan(imu_bias=[(0.0, 0.0, 0.0)])
    with pytest.raises(ValueError):
        SensorFaultPlan(freeze_events=[
            FreezeEvent(sensor_id="imu2", t_start=1.0),
            FreezeEvent(sensor_id="imu2", t_start=2.0),
        ])
    plan = SensorFaultPlan(freeze_events=[FreezeEvent(sensor_id="imu1", t_start=30.0)])
    with pytest.raises(ValueError):
        plan.check_duration(10.0)
