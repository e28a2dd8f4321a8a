import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from velocity_estimation.core.exceptions import DivergedError
from velocity_estimation.network.gru import GruNetwork, forward_batch
from velocity_estimation.network.training import (
    TrainConfig,
    bptt_gradients,
    evaluate_loss,
    train,
)

TARGET = np.array([0.5, -0.3, 0.2, 0.1, -0.4])


def toy_windows(n, steps=15):
    inputs = np.zeros((n, steps, 13))
    targets = np.broadcast_to(TARGET, (n, steps, 5)).copy()
    return inputs, targets


def toy_config(**overrides):
    values = dict(hidden_dims=[4], dropout=0.0, learning_rate=1e-2, lr_decay=0.97, batch_size=4,
                  input_steps=5, output_steps=10, warmup_steps=0, max_epochs=200, patience=200,
                  clip_norm=None, seed=0)
    values.update(overrides)
    return TrainConfig(**values)


def test_constant_target_is_learned():
    config = toy_config()
    net, history = train(config.build_network(), toy_windows(16), toy_windows(4), config)
    assert history.best_val_loss < 1e-3
    assert evaluate_loss(net, toy_windows(4), config.input_steps) == pytest.approx(history.best_val_loss)


def test_same_seed_gives_identical_history():
    rng = np.random.default_rng(3)
    train_w = (rng.normal(size=(12, 12, 13)), rng.normal(size=(12, 12, 5)))
    val_w = (rng.normal(size=(4, 12, 13)), rng.normal(size=(4, 12, 5)))
    config = toy_config(hidden_dims=[6], dropout=0.2, input_steps=4, output_steps=8, max_epochs=5)
    _, first = train(config.build_network(), train_w, val_w, config)
    _, second = train(config.build_network(), train_w, val_w, config)
    assert first.train_loss == second.train_loss
    assert first.val_loss == second.val_loss


def test_early_stopping_restores_best_parameters():
    rng = np.random.default_rng(4)
    train_w = (rng.normal(size=(8, 10, 13)), rng.normal(size=(8, 10, 5)))
    val_w = (rng.normal(size=(4, 10, 13)), rng.normal(size=(4, 10, 5)))
    config = toy_config(hidden_dims=[8], learning_rate=0.05, lr_decay=1.0, input_steps=3, output_steps=7,
                        max_epochs=60, patience=3)
    net, history = train(config.build_network(), train_w, val_w, config)

    assert history.best_epoch == int(np.argmin(history.val_loss))
    assert evaluate_loss(net, val_w, config.input_steps) == pytest.approx(history.best_val_loss, rel=1e-12)
    if history.stopped_early:
        assert history.epochs[-1] - history.best_epoch == config.patience
    else:
        assert len(history.epochs) == config.max_epochs


def test_validation_loss_ignores_dropout():
    net = GruNetwork.create("rnn1", seed=2, dropout=0.5)
    rng = np.random.default_rng(5)
    windows = (rng.normal(size=(3, 20, 13)), rng.normal(size=(3, 20, 5)))
    assert evaluate_loss(net, windows, 5) == evaluate_loss(net.with_dropout(0.0), windows, 5)


def test_zero_loss_gives_zero_gradients():
    net = GruNetwork.create([3], seed=1, dropout=0.0)
    inputs = np.random.default_rng(6).normal(size=(2, 6, 13))
    targets, _, _ = forward_batch(net, inputs)
    config = toy_config(input_steps=2, output_steps=4)
    loss, grads = bptt_gradients(net, inputs, targets, config, train_mode=False)
    assert loss == 0.0
    assert all(np.all(g == 0.0) for g in grads.values())


def test_non_finite_loss_raises():
    config = toy_config(max_epochs=2)
    inputs, targets = toy_windows(4)
    inputs[0, 0, 0] = np.nan
    with pytest.raises(DivergedError):
        train(config.build_network(), (inputs, targets), toy_windows(2), config)


def test_empty_windows_raise():
    config = toy_config()
    empty = (np.zeros((0, 15, 13)), np.zeros((0, 15, 5)))
    with pytest.raises(ValueError):
        train(config.build_network(), empty, toy_windows(2), config)


def test_history_is_written(tmp_path):
    config = toy_config(max_epochs=3)
    _, history = train(config.build_network(), toy_windows(4), toy_windows(2), config,
                       history_path=tmp_path / "history.csv")
    table = pd.read_csv(tmp_path / "history.csv")
    assert list(table.columns) == ["epoch", "train_loss", "val_loss"]
    assert len(table) == len(history.epochs) == 3


def test_config_validation():
    assert TrainConfig().sequence_length == 500
    assert TrainConfig(hidden_dims="64").hidden_dims == [64]
    assert TrainConfig(clip_norm="none").clip_norm is None
    with pytest.raises(ValidationError):
        TrainConfig(warmup_steps=600)
    with pytest.raises(ValidationError):
        TrainConfig(unknown=1)
    net = TrainConfig(hidden_dims="rnn2").build_network()
    assert net.hidden_dims == (32, 32)
