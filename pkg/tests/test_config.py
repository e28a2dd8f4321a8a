import pytest
from pydantic import ValidationError

from velocity_estimation.core.config import dump_key_value_config, load_key_value_config, settings
from velocity_estimation.filters.state import MkfConfig
from velocity_estimation.sim.params import SensorFaultPlan, VehicleParams


def test_settings_defaults():
    assert settings.FRAME_RATE_HZ == 200.0
    assert settings.frame_dt == pytest.approx(0.005)
    assert settings.WARMUP_FRAMES == 200
    assert settings.LOG_LEVEL in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def test_load_key_value_config_with_comments_and_lists(tmp_path):
    path = tmp_path / "vehicle.txt"
    path.write_text(
        "# lighter car\n"
        "mass=180\n"
        "wheel_radius=0.21,0.21,0.22,0.22\n"
        "wheel_positions=0.8,0.6,0.8,-0.6,-0.7,0.6,-0.7,-0.6\n",
        encoding="utf-8",
    )
    params = load_key_value_config(path, VehicleParams)
    assert params.mass == 180.0
    assert params.wheel_radius == [0.21, 0.21, 0.22, 0.22]
    assert params.wheel_positions[1] == (0.8, -0.6)
    assert params.wheelbase == pytest.approx(1.5)


def test_load_key_value_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "mkf.txt"
    path.write_text("mode=baseline\nnot_a_key=1\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_key_value_config(path, MkfConfig)


def test_load_key_value_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_key_value_config(tmp_path / "absent.txt", MkfConfig)


def test_mkf_config_routes_noise_keys(tmp_path):
    path = tmp_path / "mkf.txt"
    path.write_text("mode=baseline\nq_v=0.5\ngate_enabled=false\next_offset=1.2,0.1\n", encoding="utf-8")
    config = load_key_value_config(path, MkfConfig)
    assert config.mode == "baseline"
    assert config.noise.q_v == 0.5
    assert config.noise.gate_enabled is False
    assert config.ext_offset == (1.2, 0.1)


def test_mkf_config_dump_roundtrip(tmp_path):
    config = MkfConfig(mode="baseline", q_a=20.0, stale_timeout=0.2)
    path = dump_key_value_config(config, tmp_path / "out" / "mkf.txt")
    assert load_key_value_config(path, MkfConfig) == config


def test_fault_plan_from_flat_keys(tmp_path):
    path = tmp_path / "faults.txt"
    path.write_text(
        "imu_bias=0.2,0,0,0,0.1,0\n"
        "freeze_imu2=5.0\n"
        "noise_accel=0.01\n",
        encoding="utf-8",
    )
    plan = load_key_value_config(path, SensorFaultPlan)
    assert plan.imu_bias == [(0.2, 0.0, 0.0), (0.0, 0.1, 0.0)]
    assert plan.freeze_time("imu2") == 5.0
    assert plan.noise_sigmas.accel == 0.01
    assert plan.noise_sigmas.gyro == 0.002

    again = load_key_value_config(dump_key_value_config(plan, tmp_path / "dump.txt"), SensorFaultPlan)
    assert again == plan


def test_vehicle_config_rejects_invalid_values(tmp_path):
    path = tmp_path / "vehicle.txt"
    path.write_text("mass=-1\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_key_value_config(path, VehicleParams)
