"""Estimate tables: ``t,vx,vy,yawrate,ax,ay`` plus optional ``p00..p44``."""
from __future__ import annotations

from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

from velocity_estimation.data.frames import TARGET_COLUMNS
from velocity_estimation.filters.state import N_STATES, FilterState
from velocity_estimation.sim.io import read_csv, write_csv

COVARIANCE_COLUMNS: List[str] = [f"p{i}{j}" for i in range(N_STATES) for j in range(N_STATES)]


def estimates_to_frame(states: Sequence[FilterState], with_covariance: bool = True) -> pd.DataFrame:
    """Tabulate filter states, one row per frame."""
    table = pd.DataFrame(np.array([s.mean for s in states]).reshape(-1, N_STATES), columns=TARGET_COLUMNS)
    table.insert(0, "t", [s.time for s in states])
    if with_covariance:
        cov = np.array([s.covariance.ravel() for s in states]).reshape(-1, N_STATES * N_STATES)
        table = pd.concat([table, pd.DataFrame(cov, columns=COVARIANCE_COLUMNS)], axis=1)
    return table


def write_estimates(states: Sequence[FilterState], path: Union[str, Path],
                    with_covariance: bool = True) -> Path:
    return write_csv(estimates_to_frame(states, with_covariance), path)


def read_estimates(path: Union[str, Path]) -> pd.DataFrame:
    return read_csv(path, required=["t", *TARGET_COLUMNS])
