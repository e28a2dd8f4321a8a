"""From-scratch stacked GRU estimator: forward, BPTT, Adam training, checkpoints."""

from velocity_estimation.network.checkpoint import load_checkpoint, save_checkpoint  # noqa: F401
from velocity_estimation.network.gru import (  # noqa: F401
    PRESETS,
    GruLayerParams,
    GruNetwork,
    forward_sequence,
    gru_cell_step,
)
from velocity_estimation.network.inference import GruEstimator, predict_stream  # noqa: F401
from velocity_estimation.network.loss import masked_rmse_loss  # noqa: F401
from velocity_estimation.network.optim import AdamState, adam_step, clip_global_norm  # noqa: F401
from velocity_estimation.network.training import TrainConfig, TrainHistory, bptt_gradients, train  # noqa: F401
