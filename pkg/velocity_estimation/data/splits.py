"""Scenario-level train/test/validation splits stratified by surface."""
from __future__ import annotations

from collections import defaultdict
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from velocity_estimation.core.exceptions import InsufficientScenariosError
from velocity_estimation.data.frames import Dataset
from velocity_estimation.utils.logging import get_logger

logger = get_logger(__name__)

SPLITS = ("train", "test", "validation")
# 11 training, 3 test and 4 validation datasets out of 18
SPLIT_FRACTIONS = {"train": 11 / 18, "test": 3 / 18, "validation": 4 / 18}


def split_targets(n: int) -> Dict[str, int]:
    """Scenario counts per split for ``n`` scenarios."""
    test = int(round(n * SPLIT_FRACTIONS["test"]))
    validation = int(round(n * SPLIT_FRACTIONS["validation"]))
    return {"train": n - test - validation, "test": test, "validation": validation}


def build_splits(
    manifest: Sequence[Mapping[str, object]],
    durations: Optional[Mapping[str, float]] = None,
    seed: int = 0,
) -> Dict[str, List[str]]:
    """
    Assign whole scenarios to splits.

    Args:
        manifest: Entries with an ``id`` and a ``surface`` class
        durations: Optional seconds per id, only used for the split summary
        seed: Shuffle seed inside each surface class

    Returns:
        Mapping split -> scenario ids; each split holds every surface class

    Raises:
        InsufficientScenariosError: If a surface class has fewer than 3 scenarios
        ValueError: If an id appears twice
    """
    ids = [str(entry["id"]) for entry in manifest]
    if len(set(ids)) != len(ids):
        raise ValueError("Scenario ids in the manifest must be unique")

    by_surface: Dict[str, List[str]] = defaultdict(list)
    for entry in manifest:
        by_surface[str(entry.get("surface", "flat"))].append(str(entry["id"]))
    short = {s: len(v) for s, v in by_surface.items() if len(v) < len(SPLITS)}
    if not manifest or short:
        raise InsufficientScenariosError(
            f"Every surface class needs at least {len(SPLITS)} scenarios, got {short or 'none'}"
        )

    rng = np.random.default_rng(seed)
    targets = split_targets(len(ids))
    assigned: Dict[str, List[str]] = {split: [] for split in SPLITS}
    remaining: List[str] = []
    for surface in sorted(by_surface):
        members = sorted(by_surface[surface])
        rng.shuffle(members)
        # one of each class in every split first
        assigned["test"].append(members[0])
        assigned["validation"].append(members[1])
        assigned["train"].append(members[2])
        remaining.extend(members[3:])

    for scenario_id in remaining:
        deficits = {split: targets[split] - len(assigned[split]) for split in SPLITS}
        split = max(SPLITS, key=lambda s: (deficits[s], s == "train"))
        if deficits[split] <= 0:
            split = "train"
        assigned[split].append(scenario_id)

    for split in SPLITS:
        total = sum((durations or {}).get(i, 0.0) for i in assigned[split])
        logger.info(f"{split}: {len(assigned[split])} scenarios, {total:.1f}s")
    return assigned


def apply_splits(datasets: Sequence[Dataset], splits: Mapping[str, Sequence[str]]) -> Dict[str, List[Dataset]]:
    """Tag datasets with their split and group them."""
    lookup = {scenario_id: split for split, members in splits.items() for scenario_id in members}
    grouped: Dict[str, List[Dataset]] = {split: [] for split in SPLITS}
    for dataset in datasets:
        split = lookup.get(dataset.name)
        if split is None:
            logger.warning(f"{dataset.name} is not in any split, skipped")
            continue
        dataset.split = split
        grouped[split].append(dataset)
    return grouped


def manifest_entries(datasets: Sequence[Dataset]) -> List[Dict[str, object]]:
    return [{"id": d.name, "surface": d.surface, "seed": d.seed} for d in datasets]


def assign_splits(datasets: Sequence[Dataset], seed: int = 0, rate: float = 200.0) -> Dict[str, List[Dataset]]:
    """Group datasets by their recorded split, or draw splits when none are recorded."""
    if datasets and all(d.split in SPLITS for d in datasets):
        grouped: Dict[str, List[Dataset]] = {split: [] for split in SPLITS}
        for dataset in datasets:
            grouped[dataset.split].append(dataset)
        return grouped
    durations = {d.name: len(d) / rate for d in datasets}
    return apply_splits(datasets, build_splits(manifest_entries(datasets), durations, seed))
