import time

import numpy as np
import pytest

from tests.conftest import make_frames
from velocity_estimation.core.exceptions import MissingCheckpointError
from velocity_estimation.data.frames import INPUT_COLUMNS, TARGET_COLUMNS, frames_from_table
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.network.checkpoint import load_checkpoint, read_header, require_checkpoint, save_checkpoint
from velocity_estimation.network.gru import GruNetwork
from velocity_estimation.network.inference import GruEstimator, predict_stream, predictions_to_frame


def random_frames(n, seed=0):
    rng = np.random.default_rng(seed)
    frames = make_frames(n)
    frames[INPUT_COLUMNS] = rng.normal(size=(n, len(INPUT_COLUMNS)))
    return frames


def some_norm():
    return NormStats(
        input_mean=np.linspace(-1.0, 1.0, 13),
        input_std=np.linspace(0.5, 2.0, 13),
        output_mean=np.array([10.0, 0.0, 0.1, 0.5, -0.5]),
        output_std=np.array([5.0, 0.5, 0.3, 2.0, 3.0]),
    )


def test_bias_only_network_predicts_denormalized_bias():
    net = GruNetwork.create([4], seed=0, dropout=0.0)
    params = net.copy_parameters()
    params["dense.W"][:] = 0.0
    params["dense.b"][:] = [1.0, -1.0, 0.0, 0.5, 2.0]
    net.load_parameters(params)
    estimates = predict_stream(net, some_norm(), random_frames(10), warmup=0)
    expected = np.array([15.0, -0.5, 0.1, 1.5, 5.5])
    for estimate in estimates:
        np.testing.assert_allclose(estimate.to_array(), expected)


def test_reliable_flag_follows_warmup():
    estimates = predict_stream(GruNetwork.create("rnn1"), NormStats.identity(), random_frames(8), warmup=3)
    assert [e.reliable for e in estimates] == [False] * 3 + [True] * 5


def test_stepwise_estimator_matches_single_pass():
    net = GruNetwork.create("rnn2", seed=4)
    norm = some_norm()
    frames = random_frames(40, seed=2)
    batch = predict_stream(net, norm, frames, warmup=5)
    estimator = GruEstimator(net, norm, warmup=5)
    for frame, expected in zip(frames_from_table(frames), batch):
        got = estimator.step(frame)
        np.testing.assert_allclose(got.to_array(), expected.to_array(), atol=1e-10)
        assert got.reliable == expected.reliable


def test_estimator_reset_restarts_hidden_state():
    net = GruNetwork.create([5], seed=1)
    estimator = GruEstimator(net, NormStats.identity(), warmup=0)
    frames = frames_from_table(random_frames(5, seed=3))
    first = [estimator.step(f).to_array() for f in frames]
    estimator.reset()
    again = [estimator.step(f).to_array() for f in frames]
    np.testing.assert_allclose(first, again)


def test_predictions_to_frame_layout():
    frames = random_frames(6)
    estimates = predict_stream(GruNetwork.create([3]), NormStats.identity(), frames, warmup=2)
    table = predictions_to_frame(frames["t"], estimates)
    assert list(table.columns) == ["t", *TARGET_COLUMNS, "reliable"]
    assert table["reliable"].tolist() == [0, 0, 1, 1, 1, 1]


def test_rnn1_streams_500_frames_within_50_ms():
    net = GruNetwork.create("rnn1", seed=0)
    frames = random_frames(500)
    predict_stream(net, some_norm(), frames)
    timings = []
    for _ in range(5):
        start = time.perf_counter()
        estimates = predict_stream(net, some_norm(), frames)
        timings.append(time.perf_counter() - start)
    assert len(estimates) == 500
    assert min(timings) < 0.05


def test_checkpoint_roundtrip(tmp_path):
    net = GruNetwork.create("rnn2", seed=7, dropout=0.1)
    norm = some_norm()
    path = save_checkpoint(net, norm, tmp_path / "models" / "rnn2.ckpt")

    loaded, loaded_norm = load_checkpoint(path)
    assert loaded.hidden_dims == (32, 32)
    assert loaded.preset == "rnn2"
    assert loaded.dropout == 0.1
    for name, value in net.parameters().items():
        np.testing.assert_array_equal(loaded.parameters()[name], value)
    for key, value in norm.to_dict().items():
        assert loaded_norm.to_dict()[key] == value

    header, _ = read_header(path)
    assert header["gate_convention"] == "h=z*h_prev+(1-z)*h_tilde"


def test_loaded_network_predicts_identically(tmp_path):
    net = GruNetwork.create([6], seed=3)
    norm = some_norm()
    frames = random_frames(20)
    loaded, loaded_norm = load_checkpoint(save_checkpoint(net, norm, tmp_path / "net.ckpt"))
    before = [e.to_array() for e in predict_stream(net, norm, frames)]
    after = [e.to_array() for e in predict_stream(loaded, loaded_norm, frames)]
    np.testing.assert_array_equal(before, after)


def test_truncated_checkpoint_is_rejected(tmp_path):
    path = save_checkpoint(GruNetwork.create([2]), NormStats.identity(), tmp_path / "net.ckpt")
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(MissingCheckpointError):
        load_checkpoint(tmp_path / "absent.ckpt")
    with pytest.raises(MissingCheckpointError):
        require_checkpoint(None)
