"""Running a trained network over frame streams."""
from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from velocity_estimation.core.config import settings
from velocity_estimation.data.frames import INPUT_COLUMNS, TARGET_COLUMNS, FrameInput, SensorFrame, as_frame_table
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.filters.state import StateEstimate
from velocity_estimation.network.gru import GruNetwork, forward_sequence, gru_cell_step
from velocity_estimation.network.activations import leaky_relu
from velocity_estimation.utils.logging import get_logger

logger = get_logger(__name__)


def predict_array(net: GruNetwork, norm: NormStats, inputs: np.ndarray) -> np.ndarray:
    """Denormalized (T, 5) predictions for raw (T, 13) inputs, dropout off."""
    outputs, _ = forward_sequence(net, norm.normalize_inputs(inputs), train_mode=False)
    return norm.denormalize_outputs(outputs)


def predict_stream(
    net: GruNetwork,
    norm: NormStats,
    frames: FrameInput,
    warmup: Optional[int] = None,
) -> List[StateEstimate]:
    """
    One estimate per frame from a single pass with persistent hidden state.

    The first ``warmup`` estimates (default ``settings.WARMUP_FRAMES``) are
    flagged unreliable.
    """
    warmup = settings.WARMUP_FRAMES if warmup is None else warmup
    table = as_frame_table(frames)
    values = predict_array(net, norm, table[INPUT_COLUMNS].to_numpy(dtype=float))
    if len(values) < warmup:
        logger.warning(f"Only {len(values)} frames, every estimate is inside the {warmup}-frame warm-up")
    return [StateEstimate.from_array(row, reliable=k >= warmup) for k, row in enumerate(values)]


def predictions_to_frame(times: Sequence[float], estimates: Sequence[StateEstimate]) -> pd.DataFrame:
    table = pd.DataFrame([e.to_array() for e in estimates], columns=TARGET_COLUMNS)
    table.insert(0, "t", np.asarray(times, dtype=float))
    table["reliable"] = [int(e.reliable) for e in estimates]
    return table


class GruEstimator:
    """Frame-by-frame estimator holding the hidden state between calls."""

    def __init__(self, net: GruNetwork, norm: NormStats, warmup: Optional[int] = None) -> None:
        self.net = net
        self.norm = norm
        self.warmup = settings.WARMUP_FRAMES if warmup is None else warmup
        self.reset()

    def reset(self) -> None:
        self.hidden = [np.zeros(layer.hidden_dim) for layer in self.net.layers]
        self.frames_seen = 0

    def step(self, frame: SensorFrame) -> StateEstimate:
        x = self.norm.normalize_inputs(frame.inputs())
        for k, layer in enumerate(self.net.layers):
            self.hidden[k] = gru_cell_step(layer, x, self.hidden[k])
            x = self.hidden[k]
        y = self.net.W_out @ leaky_relu(x, self.net.slope) + self.net.b_out
        self.frames_seen += 1
        return StateEstimate.from_array(self.norm.denormalize_outputs(y),
                                        reliable=self.frames_seen > self.warmup)
