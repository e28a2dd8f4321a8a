import numpy as np
import pytest

from velocity_estimation.core.exceptions import LengthMismatchError, NonFiniteInputError
from velocity_estimation.data.frames import INPUT_COLUMNS, Dataset, SensorFrame, frames_from_table
from velocity_estimation.data.io import prepare_run, read_dataset, read_datasets, write_dataset
from velocity_estimation.sim.io import write_run
from velocity_estimation.sim.scenarios import ScenarioSpec, simulate
from tests.conftest import make_dataset, make_frames


def test_sensor_frame_roundtrip_through_values():
    table = make_frames(3, imu1_ax=0.5, w_rr=12.0, tq_f=30.0, tq_fl=10.0, tq_fr=20.0)
    frames = frames_from_table(table)
    assert isinstance(frames[0], SensorFrame)
    assert frames[1].inputs().shape == (13,)
    assert frames[1].inputs()[INPUT_COLUMNS.index("w_rr")] == 12.0
    assert frames[2].to_values()["tq_fr"] == 20.0


def test_write_and_read_dataset(tmp_path):
    dataset = make_dataset("run_a", make_frames(50, imu1_ax=0.25), split="test", surface="wet", seed=4)
    write_dataset(dataset, tmp_path / "run_a")
    loaded = read_dataset(tmp_path / "run_a")
    assert loaded.name == "run_a"
    assert loaded.split == "test"
    assert loaded.surface == "wet"
    assert loaded.seed == 4
    np.testing.assert_allclose(loaded.inputs(), dataset.inputs())
    np.testing.assert_allclose(loaded.target_values(), dataset.target_values())


def test_read_datasets_sorted(tmp_path):
    for name in ("b", "a"):
        write_dataset(make_dataset(name, make_frames(20)), tmp_path / name)
    assert [d.name for d in read_datasets(tmp_path)] == ["a", "b"]
    assert len(read_datasets(tmp_path / "a")) == 1
    with pytest.raises(FileNotFoundError):
        read_datasets(tmp_path / "a" / "missing")


def test_misaligned_targets_raise():
    targets = make_dataset("x", make_frames(20)).targets
    with pytest.raises(LengthMismatchError):
        Dataset(name="y", frames=make_frames(19), targets=targets)


def test_prepare_run_from_simulation(tmp_path):
    result = simulate(ScenarioSpec(name="standstill", duration=3.0, seed=1))
    write_run(result, tmp_path / "raw")
    dataset = prepare_run(tmp_path / "raw", with_targets=True)
    assert len(dataset) == 601
    assert dataset.targets is not None and len(dataset.targets) == 601
    assert dataset.ground_truth is not None and len(dataset.ground_truth) == 601
    assert dataset.provenance["scenario"] == "standstill"
    assert np.max(np.abs(dataset.targets["vx"].to_numpy())) < 0.05


def test_read_dataset_rejects_non_finite_inputs(tmp_path):
    frames = make_frames(30, imu1_ax=0.1)
    frames.loc[12, "imu1_ax"] = np.nan
    write_dataset(make_dataset("gap", frames), tmp_path / "gap")
    with pytest.raises(NonFiniteInputError, match="frames.csv"):
        read_dataset(tmp_path / "gap")
