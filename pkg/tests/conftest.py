import numpy as np
import pandas as pd
import pytest

from velocity_estimation.data.frames import Dataset, TARGET_COLUMNS, frame_columns


def make_frames(n, rate=200.0, with_ext=True, **values):
    """Synchronized frame table of ``n`` rows; unspecified channels are zero."""
    columns = frame_columns(with_ext)
    table = pd.DataFrame(0.0, index=range(n), columns=columns)
    table["t"] = np.arange(n) / rate
    for column, value in values.items():
        table[column] = value
    return table


def make_dataset(name, frames, targets=None, split=None, surface="flat", seed=0, ground_truth=None):
    if targets is None:
        targets = pd.DataFrame(0.0, index=range(len(frames)), columns=TARGET_COLUMNS)
    targets = targets.copy()
    targets.insert(0, "t", frames["t"].to_numpy())
    return Dataset(
        name=name,
        frames=frames,
        targets=targets,
        split=split,
        provenance={"surface": surface, "seed": str(seed), "scenario": "synthetic"},
        ground_truth=ground_truth,
    )


@pytest.fixture
def frame_factory():
    return make_frames


@pytest.fixture
def dataset_factory():
    return make_dataset
