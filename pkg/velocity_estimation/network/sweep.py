"""Grid runner over training hyper-parameters."""
from __future__ import annotations

import itertools
import time
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import pandas as pd
from dotenv import dotenv_values

from velocity_estimation.data.frames import Dataset
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.data.windows import build_windows
from velocity_estimation.network.gru import PRESETS
from velocity_estimation.network.training import TrainConfig, train
from velocity_estimation.utils.logging import get_logger, log_performance

logger = get_logger(__name__)

SWEEP_NAME = "sweep.csv"

# searched ranges, defaults in the middle where there is one
SEARCH_RANGES: Dict[str, List[Any]] = {
    "hidden_dims": [[16], [64], [256], [32, 32], [32, 32, 32]],
    "input_steps": [20, 300, 500],
    "output_steps": [100, 200, 1000],
    "learning_rate": [1e-4, 5e-4, 1e-2],
    "clip_norm": [None, 1.0],
    "dropout": [0.0, 0.075, 0.25],
}


def expand_grid(grid: Mapping[str, Sequence[Any]]) -> List[Dict[str, Any]]:
    unknown = sorted(set(grid) - set(TrainConfig.model_fields))
    if unknown:
        raise ValueError(f"Unknown training keys in grid: {unknown}")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def run_sweep(
    grid: Mapping[str, Sequence[Any]],
    train_datasets: Sequence[Dataset],
    val_datasets: Sequence[Dataset],
    norm: NormStats,
    base_config: Optional[TrainConfig] = None,
    max_epochs: Optional[int] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> pd.DataFrame:
    """
    Train one fresh network per grid point.

    Args:
        grid: TrainConfig field -> values to try
        max_epochs: Epoch budget per point (overrides the base config)
        output_dir: Where ``sweep.csv`` is written, if given

    Returns:
        One row per grid point with the varied keys, best validation loss,
        best epoch, epochs run and wall time
    """
    base = (base_config or TrainConfig()).model_dump()
    if max_epochs is not None:
        base["max_epochs"] = max_epochs
    points = expand_grid(grid)
    windows_cache: Dict[tuple, tuple] = {}
    rows = []
    with log_performance(f"sweep over {len(points)} points", logger):
        for k, point in enumerate(points):
            config = TrainConfig(**{**base, **point})
            key = (config.input_steps, config.output_steps, config.stride)
            if key not in windows_cache:
                windows_cache[key] = (
                    build_windows(train_datasets, norm, *key),
                    build_windows(val_datasets, norm, *key),
                )
            train_windows, val_windows = windows_cache[key]
            net = config.build_network()
            started = time.perf_counter()
            _, history = train(net, train_windows, val_windows, config)
            row = {name: _cell(value) for name, value in point.items()}
            row.update(
                best_val_loss=history.best_val_loss,
                best_epoch=history.best_epoch,
                epochs=len(history.epochs),
                seconds=round(time.perf_counter() - started, 3),
            )
            rows.append(row)
            logger.info(f"sweep {k + 1}/{len(points)} {point}: val {history.best_val_loss:.6f}")

    table = pd.DataFrame(rows)
    if output_dir is not None:
        path = Path(output_dir) / SWEEP_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, index=False, float_format="%.9g")
        logger.info(f"Sweep table written to {path}")
    return table


def _cell(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return "x".join(str(v) for v in value)
    return "none" if value is None else value


def parse_grid_value(key: str, token: str) -> Any:
    """``hidden_dims`` tokens: preset name, ``64`` or ``32x32``; other keys stay text."""
    token = token.strip()
    if key == "hidden_dims" and token not in PRESETS:
        return [int(v) for v in token.split("x")]
    return token


def load_grid(path: Union[str, Path]) -> Dict[str, List[Any]]:
    """Read a key=value grid file with comma separated candidate values."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Grid file not found: {path}")
    grid = {
        key.strip(): [parse_grid_value(key.strip(), t) for t in value.split(",") if t.strip()]
        for key, value in dotenv_values(path).items()
        if value
    }
    expand_grid(grid)
    return grid
