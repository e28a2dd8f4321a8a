"""Dataset directories: frames.csv, targets.csv, ground_truth.csv, manifest.txt."""
from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Union

from velocity_estimation.data.frames import TARGET_COLUMNS, Dataset, INPUT_COLUMNS
from velocity_estimation.data.sync import zero_order_hold_sync
from velocity_estimation.data.targets import DEFAULT_SIGMA, generate_target
from velocity_estimation.filters.state import MkfConfig
from velocity_estimation.sim.io import (
    GROUND_TRUTH_NAME,
    MANIFEST_NAME,
    read_csv,
    read_ground_truth,
    read_manifest,
    read_raw_stream,
    write_csv,
    write_manifest,
)
from velocity_estimation.utils.logging import get_logger, log_performance

logger = get_logger(__name__)

FRAMES_NAME = "frames.csv"
TARGETS_NAME = "targets.csv"


def write_dataset(dataset: Dataset, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(dataset.frames, directory / FRAMES_NAME)
    if dataset.targets is not None:
        write_csv(dataset.targets, directory / TARGETS_NAME)
    if dataset.ground_truth is not None:
        write_csv(dataset.ground_truth, directory / GROUND_TRUTH_NAME)
    manifest = {"id": dataset.name, **dataset.provenance}
    if dataset.split:
        manifest["split"] = dataset.split
    write_manifest(manifest, directory / MANIFEST_NAME)
    logger.info(f"Dataset {dataset.name} written to {directory} ({len(dataset)} frames)")
    return directory


def read_dataset(directory: Union[str, Path]) -> Dataset:
    """
    Load a dataset directory.

    Raises:
        FileNotFoundError: If frames.csv is missing
        MissingChannelError: If a required column is absent
        NonFiniteInputError: If a required column holds NaN or inf
    """
    directory = Path(directory)
    frames = read_csv(directory / FRAMES_NAME, required=["t", *INPUT_COLUMNS])
    targets = None
    if (directory / TARGETS_NAME).exists():
        targets = read_csv(directory / TARGETS_NAME, required=["t", *TARGET_COLUMNS])
    ground_truth = read_ground_truth(directory) if (directory / GROUND_TRUTH_NAME).exists() else None
    provenance = read_manifest(directory / MANIFEST_NAME) if (directory / MANIFEST_NAME).exists() else {}
    name = provenance.pop("id", directory.name)
    split = provenance.pop("split", None)
    return Dataset(name=name, frames=frames, targets=targets, split=split,
                   provenance=provenance, ground_truth=ground_truth)


def read_datasets(root: Union[str, Path]) -> List[Dataset]:
    """Every dataset directory directly below ``root`` (sorted by name)."""
    root = Path(root)
    if (root / FRAMES_NAME).exists():
        return [read_dataset(root)]
    directories = sorted(p for p in root.iterdir() if (p / FRAMES_NAME).exists())
    if not directories:
        raise FileNotFoundError(f"No dataset directories under {root}")
    return [read_dataset(p) for p in directories]


def prepare_run(
    run_dir: Union[str, Path],
    with_targets: bool = True,
    config: Optional[MkfConfig] = None,
    sigma: float = DEFAULT_SIGMA,
    rate: Optional[float] = None,
) -> Dataset:
    """Synchronize a simulated run and optionally attach reference targets."""
    run_dir = Path(run_dir)
    with log_performance(f"prepare {run_dir.name}", logger):
        raw = read_raw_stream(run_dir)
        frames = zero_order_hold_sync(raw, rate)
        provenance = read_manifest(run_dir / MANIFEST_NAME) if (run_dir / MANIFEST_NAME).exists() else {}
        ground_truth = None
        if (run_dir / GROUND_TRUTH_NAME).exists():
            ground_truth = read_ground_truth(run_dir).iloc[:len(frames)].reset_index(drop=True)
        targets = generate_target(frames, config, sigma) if with_targets else None
    return Dataset(name=run_dir.name, frames=frames, targets=targets,
                   provenance=provenance, ground_truth=ground_truth)
