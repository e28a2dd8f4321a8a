import numpy as np
import pandas as pd
import pytest

from tests.conftest import make_dataset, make_frames
from velocity_estimation.core.exceptions import LengthMismatchError, MissingChannelError, ZeroNormalizerError
from velocity_estimation.data.frames import TARGET_COLUMNS
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.evaluation.metrics import (
    EvalConfig,
    compare_estimators,
    network_estimator,
    percent_error,
    rmse,
)
from velocity_estimation.network.gru import GruNetwork


def targets_frame(n, seed):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(n, len(TARGET_COLUMNS))) + np.array([10.0, 0.5, 0.2, 1.0, -1.0])
    return pd.DataFrame(values, columns=TARGET_COLUMNS)


def dataset(name, n=50, seed=0):
    return make_dataset(name, make_frames(n), targets_frame(n, seed))


def offset_estimator(offset):
    return lambda d: d.target_values() + offset


def test_rmse_example():
    assert rmse([1.0, 2.0], [4.0, 6.0]) == pytest.approx(3.5355, abs=1e-4)
    with pytest.raises(LengthMismatchError):
        rmse([1.0, 2.0], [1.0])


@pytest.mark.parametrize("value, normalizer, expected", [(0.141, 15.0, 0.94), (0.059, 1.51, 3.91)])
def test_percent_error_examples(value, normalizer, expected):
    assert percent_error(value, normalizer) == pytest.approx(expected, abs=0.005)


def test_percent_error_needs_positive_normalizer():
    with pytest.raises(ZeroNormalizerError):
        percent_error(0.1, 0.0)


def test_identical_estimator_scores_zero():
    report = compare_estimators([dataset("a")], {"copy": offset_estimator(0.0)}, EvalConfig(warmup=5))
    assert all(report.get("copy", s).rmse == 0.0 for s in TARGET_COLUMNS)
    assert report.n_samples == 45


def test_errors_pool_over_samples():
    datasets = [dataset("a", 30, 1), dataset("b", 30, 2)]
    errors = {"a": 1.0, "b": 3.0}
    report = compare_estimators(
        datasets, {"est": lambda d: d.target_values() + errors[d.name]}, EvalConfig(warmup=10)
    )
    assert report.get("est", "vx").rmse == pytest.approx(np.sqrt(5.0))


def test_dataset_order_does_not_matter():
    datasets = [dataset("a", 40, 1), dataset("b", 60, 2), dataset("c", 20, 3)]
    estimators = {"half": offset_estimator(0.5), "noisy": lambda d: d.target_values() * 1.1}
    forward = compare_estimators(datasets, estimators, EvalConfig(warmup=3))
    backward = compare_estimators(datasets[::-1], estimators, EvalConfig(warmup=3))
    for m in forward.metrics:
        other = backward.get(m.estimator, m.state)
        assert m.rmse == pytest.approx(other.rmse, rel=1e-12)
        assert m.percent_error == pytest.approx(other.percent_error, rel=1e-12)


def test_normalizer_is_peak_reference_unless_pinned():
    data = dataset("a", 30, 4)
    ref = data.target_values()[5:]
    report = compare_estimators([data], {"half": offset_estimator(0.5)}, EvalConfig(warmup=5, norm_vy=2.0))
    vx = report.get("half", "vx")
    assert vx.normalizer == pytest.approx(np.abs(ref[:, 0]).max())
    assert vx.percent_error == pytest.approx(100.0 * 0.5 / vx.normalizer)
    assert report.get("half", "vy").percent_error == pytest.approx(25.0)
    assert report.get("half", "ax").reported is False


def test_misaligned_estimator_output_raises():
    with pytest.raises(LengthMismatchError):
        compare_estimators([dataset("a")], {"short": lambda d: d.target_values()[:-1]}, EvalConfig(warmup=0))


def test_ground_truth_reference():
    n = 20
    truth = pd.DataFrame({"vx": np.full(n, 2.0), "vy": 0.1, "yaw_rate": 0.0, "ax": 0.0, "ay": 1.0})
    data = make_dataset("gt", make_frames(n), targets_frame(n, 0), ground_truth=truth)
    report = compare_estimators([data], {"truth": lambda d: truth[["vx", "vy", "yaw_rate", "ax", "ay"]].to_numpy()},
                                EvalConfig(warmup=0, reference="ground_truth"))
    assert report.get("truth", "vy").rmse == 0.0
    assert np.isnan(report.get("truth", "yawrate").percent_error)
    with pytest.raises(MissingChannelError):
        compare_estimators([dataset("plain")], {"x": offset_estimator(0.0)}, EvalConfig(reference="ground_truth"))


def test_network_estimator_output_shape():
    data = dataset("a", 25)
    values = network_estimator(GruNetwork.create([4]), NormStats.identity())(data)
    assert values.shape == (25, 5)


def test_report_rendering():
    report = compare_estimators([dataset("a")], {"half": offset_estimator(0.5)}, EvalConfig(warmup=0))
    lines = report.to_markdown().splitlines()
    assert lines[0].startswith("| estimator | vx | vy | yawrate | ax (unreported) | ay |")
    assert lines[2].startswith("| half | 0.500")
    assert len(report.to_frame()) == 5
    assert report.to_dict()["datasets"] == ["a"]


def test_standstill_ground_truth_reports_undefined_percent_error():
    n = 400
    truth = pd.DataFrame(0.0, index=range(n), columns=["vx", "vy", "yaw_rate", "ax", "ay"])
    data = make_dataset("standstill", make_frames(n), ground_truth=truth)
    report = compare_estimators([data], {"drift": lambda d: np.full((n, 5), 0.01)},
                                EvalConfig(reference="ground_truth"))
    for state in TARGET_COLUMNS:
        metric = report.get("drift", state)
        assert metric.rmse == pytest.approx(0.01)
        assert metric.normalizer == 0.0
        assert np.isnan(metric.percent_error)
    assert "0.010 (n/a)" in report.to_markdown()
    assert percent_error(0.01, 1.0) == pytest.approx(1.0)
