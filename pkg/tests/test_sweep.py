import numpy as np
import pandas as pd
import pytest

from tests.conftest import make_dataset, make_frames
from velocity_estimation.data.frames import INPUT_COLUMNS, TARGET_COLUMNS
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.network.sweep import expand_grid, load_grid, parse_grid_value, run_sweep
from velocity_estimation.network.training import TrainConfig


def test_expand_grid_is_the_cartesian_product():
    points = expand_grid({"learning_rate": [1e-3, 1e-2], "dropout": [0.0, 0.1, 0.2]})
    assert len(points) == 6
    assert points[0] == {"learning_rate": 1e-3, "dropout": 0.0}
    assert points[-1] == {"learning_rate": 1e-2, "dropout": 0.2}


def test_expand_grid_rejects_unknown_keys():
    with pytest.raises(ValueError):
        expand_grid({"momentum": [0.9]})


@pytest.mark.parametrize("token, expected", [("rnn1", "rnn1"), ("64", [64]), ("32x32", [32, 32])])
def test_parse_hidden_dims_tokens(token, expected):
    assert parse_grid_value("hidden_dims", token) == expected


def test_other_grid_values_stay_text():
    assert parse_grid_value("learning_rate", " 0.01 ") == "0.01"


def test_load_grid(tmp_path):
    path = tmp_path / "grid.txt"
    path.write_text("# grid\nhidden_dims=rnn1,16x16\nlearning_rate=0.001,0.01\n")
    grid = load_grid(path)
    assert grid == {"hidden_dims": ["rnn1", [16, 16]], "learning_rate": ["0.001", "0.01"]}
    with pytest.raises(FileNotFoundError):
        load_grid(tmp_path / "absent.txt")


def random_dataset(name, n, seed):
    rng = np.random.default_rng(seed)
    frames = make_frames(n)
    frames[INPUT_COLUMNS] = rng.normal(size=(n, len(INPUT_COLUMNS)))
    targets = pd.DataFrame(rng.normal(size=(n, len(TARGET_COLUMNS))), columns=TARGET_COLUMNS)
    return make_dataset(name, frames, targets)


def test_run_sweep_trains_every_point(tmp_path):
    base = TrainConfig(input_steps=5, output_steps=10, stride=10, warmup_steps=0, batch_size=4)
    table = run_sweep(
        {"hidden_dims": [[2], [3]], "dropout": [0.0]},
        [random_dataset("a", 60, 0), random_dataset("b", 60, 1)],
        [random_dataset("c", 30, 2)],
        NormStats.identity(),
        base,
        max_epochs=2,
        output_dir=tmp_path,
    )
    assert table["hidden_dims"].tolist() == ["2", "3"]
    assert (table["epochs"] == 2).all()
    assert np.isfinite(table["best_val_loss"]).all()
    assert (tmp_path / "sweep.csv").exists()
