import pandas as pd
import pytest

from velocity_estimation.cli import build_parser, main, parse_estimators
from velocity_estimation.data.io import write_dataset
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.network.checkpoint import save_checkpoint
from velocity_estimation.network.gru import GruNetwork
from tests.conftest import make_dataset, make_frames


def test_parser_defaults():
    args = build_parser().parse_args(["simulate", "--scenario", "launch", "--out", "runs/x"])
    assert args.seed == 0
    assert args.surface == "flat"
    assert args.duration is None
    with pytest.raises(SystemExit):
        build_parser().parse_args(["simulate", "--scenario", "drift", "--out", "runs/x"])


def test_parse_estimators(tmp_path):
    path = save_checkpoint(GruNetwork.create([2]), NormStats.identity(), tmp_path / "tiny.ckpt")
    estimators = parse_estimators(["baseline", "reference", f"tiny={path}"])
    assert list(estimators) == ["baseline", "reference", "tiny"]
    with pytest.raises(ValueError):
        parse_estimators(["kalman"])


def test_package_errors_exit_with_code_2(tmp_path):
    assert main(["casestudy", "--case", "launch", "--report", str(tmp_path)]) == 2


def test_simulate_prepare_estimate(tmp_path):
    run_dir, data_dir, out = tmp_path / "run", tmp_path / "data", tmp_path / "est.csv"
    assert main(["simulate", "--scenario", "standstill", "--duration", "3", "--no-bias",
                 "--out", str(run_dir)]) == 0
    assert main(["prepare", "--raw", str(run_dir), "--out", str(data_dir)]) == 0
    assert main(["estimate", "--mkf-mode", "baseline", "--data", str(data_dir), "--out", str(out)]) == 0
    table = pd.read_csv(out)
    assert len(table) == 601
    assert {"t", "vx", "vy"} <= set(table.columns)


def test_usage_errors_exit_with_code_2(tmp_path):
    for name in ("a", "b"):
        write_dataset(make_dataset(name, make_frames(20), split="test"), tmp_path / "data" / name)
    data = str(tmp_path / "data")
    assert main(["estimate", "--mkf-mode", "baseline", "--data", data,
                 "--out", str(tmp_path / "est.csv")]) == 2
    assert main(["evaluate", "--data", data, "--split", "validation", "--estimators", "baseline",
                 "--report", str(tmp_path / "report")]) == 2
