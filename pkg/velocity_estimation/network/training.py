"""
Mini-batch BPTT training with gradient clipping, Adam and early stopping.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from velocity_estimation.core.exceptions import DivergedError
from velocity_estimation.network.gru import (
    DEFAULT_DROPOUT,
    PRESETS,
    GruNetwork,
    SeedLike,
    backward_batch,
    forward_batch,
)
from velocity_estimation.network.activations import DEFAULT_SLOPE
from velocity_estimation.network.loss import masked_rmse_with_grad
from velocity_estimation.network.optim import AdamState, adam_step, clip_global_norm, global_norm
from velocity_estimation.utils.logging import get_logger, log_performance, log_run_summary

logger = get_logger(__name__)

MAX_EPOCHS_CEILING = 10_000
HISTORY_COLUMNS = ["epoch", "train_loss", "val_loss"]

Windows = Tuple[np.ndarray, np.ndarray]


class TrainConfig(BaseModel):
    """Network shape and optimizer settings for one training run."""

    model_config = ConfigDict(extra="forbid")

    hidden_dims: Union[str, List[int]] = "rnn1"
    dropout: float = Field(default=DEFAULT_DROPOUT, ge=0.0, lt=1.0)
    slope: float = Field(default=DEFAULT_SLOPE, ge=0.0, lt=1.0)
    learning_rate: float = Field(default=5e-4, gt=0.0)
    lr_decay: float = Field(default=1.0, gt=0.0, le=1.0, description="Per-epoch learning-rate factor")
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)
    clip_norm: Optional[float] = Field(default=1.0, gt=0.0, description="None disables clipping")
    batch_size: int = Field(default=32, ge=1)
    warmup_steps: int = Field(default=200, ge=0, description="Inference-time unreliable prefix")
    input_steps: int = Field(default=300, ge=0, description="Loss-masked window prefix")
    output_steps: int = Field(default=200, ge=1)
    stride: int = Field(default=100, ge=1)
    max_epochs: int = Field(default=2000, ge=1, le=MAX_EPOCHS_CEILING)
    patience: int = Field(default=50, ge=1)
    seed: int = Field(default=0, ge=0)

    @field_validator("hidden_dims", mode="before")
    @classmethod
    def parse_hidden_dims(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().isdigit():
            return [int(v)]
        if isinstance(v, (list, tuple)):
            return [int(x) for x in v]
        return v

    @field_validator("hidden_dims")
    @classmethod
    def validate_hidden_dims(cls, v: Union[str, List[int]]) -> Union[str, List[int]]:
        if isinstance(v, str) and v not in PRESETS:
            raise ValueError(f"Unknown preset {v!r}, expected one of {sorted(PRESETS)}")
        if isinstance(v, list) and (not v or min(v) < 1):
            raise ValueError("hidden_dims needs at least one positive layer size")
        return v

    @field_validator("clip_norm", mode="before")
    @classmethod
    def parse_clip_norm(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in ("none", "no", "off"):
            return None
        return v

    @model_validator(mode="after")
    def check_warmup(self) -> "TrainConfig":
        if self.warmup_steps > self.sequence_length:
            raise ValueError(
                f"warmup_steps {self.warmup_steps} exceeds the sequence length {self.sequence_length}"
            )
        return self

    @property
    def sequence_length(self) -> int:
        return self.input_steps + self.output_steps

    def build_network(self, input_dim: Optional[int] = None, output_dim: Optional[int] = None) -> GruNetwork:
        kwargs = {}
        if input_dim is not None:
            kwargs["input_dim"] = input_dim
        if output_dim is not None:
            kwargs["output_dim"] = output_dim
        return GruNetwork.create(self.hidden_dims, dropout=self.dropout, slope=self.slope,
                                 seed=self.seed, **kwargs)


@dataclass
class TrainHistory:
    """Per-epoch losses and the epoch whose parameters were kept."""

    epochs: List[int] = field(default_factory=list)
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False

    def record(self, epoch: int, train_loss: float, val_loss: float) -> None:
        self.epochs.append(epoch)
        self.train_loss.append(train_loss)
        self.val_loss.append(val_loss)

    @property
    def best_val_loss(self) -> float:
        return min(self.val_loss) if self.val_loss else float("inf")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"epoch": self.epochs, "train_loss": self.train_loss, "val_loss": self.val_loss},
                            columns=HISTORY_COLUMNS)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.9g")
        return path


def bptt_gradients(
    net: GruNetwork,
    inputs: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
    dropout_seed: SeedLike = None,
    train_mode: bool = True,
):
    """
    Loss and exact gradients for one batch of windows.

    The loss ignores the first ``config.input_steps`` steps of every window.
    Dropout masks are drawn once per call.

    Returns:
        (loss, gradients keyed like ``net.parameters()``)
    """
    outputs, _, cache = forward_batch(net, inputs, train_mode=train_mode,
                                      dropout_seed=dropout_seed, keep_cache=True)
    loss, grad_outputs = masked_rmse_with_grad(outputs, targets, config.input_steps)
    return loss, backward_batch(net, cache, grad_outputs)


def evaluate_loss(net: GruNetwork, windows: Windows, warmup: int, batch_size: int = 256) -> float:
    """Masked RMSE pooled over all windows, dropout off."""
    inputs, targets = windows
    squared, count = 0.0, 0
    for start in range(0, len(inputs), batch_size):
        outputs, _, _ = forward_batch(net, inputs[start:start + batch_size], train_mode=False)
        error = outputs[:, warmup:, :] - targets[start:start + batch_size, warmup:, :]
        squared += float(np.sum(error ** 2))
        count += error.size
    return float(np.sqrt(squared / count))


def train(
    net: GruNetwork,
    train_windows: Windows,
    val_windows: Windows,
    config: Optional[TrainConfig] = None,
    history_path: Optional[Union[str, Path]] = None,
) -> Tuple[GruNetwork, TrainHistory]:
    """
    Train ``net`` in place and restore its best-validation parameters.

    Args:
        train_windows: (inputs, targets), normalized, shapes (N, T, I) / (N, T, O)
        val_windows: Validation windows in the same layout
        history_path: Optional CSV destination for the per-epoch losses

    Raises:
        DivergedError: If a batch or validation loss becomes non-finite
        ValueError: If either split holds no windows
    """
    config = config or TrainConfig()
    x_train, y_train = train_windows
    if len(x_train) == 0 or len(val_windows[0]) == 0:
        raise ValueError("Training needs at least one training and one validation window")
    if x_train.shape[1] <= config.input_steps:
        raise ValueError(f"Windows of {x_train.shape[1]} steps leave nothing after {config.input_steps} masked steps")

    rng = np.random.default_rng(config.seed)
    adam = AdamState.like(net.parameters())
    history = TrainHistory()
    best_params = net.copy_parameters()
    best_loss = float("inf")
    clipped_steps = 0

    with log_performance(f"training {net.hidden_dims} on {len(x_train)} windows", logger):
        for epoch in range(config.max_epochs):
            lr = config.learning_rate * config.lr_decay ** epoch
            order = rng.permutation(len(x_train))
            batch_losses = []
            for start in range(0, len(order), config.batch_size):
                idx = order[start:start + config.batch_size]
                loss, grads = bptt_gradients(net, x_train[idx], y_train[idx], config, dropout_seed=rng)
                if not np.isfinite(loss):
                    raise DivergedError(f"Training loss became {loss} at epoch {epoch}")
                if config.clip_norm is not None:
                    if global_norm(grads) > config.clip_norm:
                        clipped_steps += 1
                    grads = clip_global_norm(grads, config.clip_norm)
                adam_step(net.parameters(), grads, adam, lr, config.beta1, config.beta2, config.epsilon)
                batch_losses.append(loss)

            train_loss = float(np.mean(batch_losses))
            val_loss = evaluate_loss(net, val_windows, config.input_steps)
            if not np.isfinite(val_loss):
                raise DivergedError(f"Validation loss became {val_loss} at epoch {epoch}")
            history.record(epoch, train_loss, val_loss)
            logger.debug(f"epoch {epoch}: train {train_loss:.6f}, val {val_loss:.6f}")

            if val_loss < best_loss:
                best_loss = val_loss
                best_params = net.copy_parameters()
                history.best_epoch = epoch
            elif epoch - history.best_epoch >= config.patience:
                history.stopped_early = True
                logger.info(f"Early stop at epoch {epoch}, best epoch {history.best_epoch}")
                break

    net.load_parameters(best_params)
    log_run_summary(logger, "training", {
        "epochs": len(history.epochs),
        "best_epoch": history.best_epoch,
        "best_val_loss": f"{best_loss:.6f}",
        "clipped_steps": clipped_steps,
    })
    if history_path is not None:
        history.write_csv(history_path)
    return net, history
