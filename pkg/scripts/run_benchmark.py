"""Desk-scale end-to-end benchmark.

Simulates a mixed-grip scenario suite (about 23 simulated minutes),
prepares datasets with reference targets, trains RNN-1 and RNN-2, compares
them with both filter modes on the test split and runs the case studies.

Usage:
    python -m scripts.run_benchmark [--out outputs/benchmark] [--epochs 300] [--workers 4]
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from velocity_estimation.core.config import load_key_value_config, settings
from velocity_estimation.data.io import prepare_run, write_dataset
from velocity_estimation.data.normalization import compute_norm_stats
from velocity_estimation.data.splits import assign_splits
from velocity_estimation.data.windows import build_windows
from velocity_estimation.evaluation.case_studies import CASES, CaseStudyConfig, run_case_study
from velocity_estimation.evaluation.metrics import EvalConfig, compare_estimators, mkf_estimator, network_estimator
from velocity_estimation.network.checkpoint import save_checkpoint
from velocity_estimation.network.training import TrainConfig, train
from velocity_estimation.sim.io import write_run
from velocity_estimation.sim.scenarios import ScenarioSpec, simulate_suite
from velocity_estimation.utils.export import export_case_studies, export_report_csv, export_report_markdown
from velocity_estimation.utils.logging import get_logger, log_performance, setup_logging

logger = get_logger(__name__)

# (surface, scenario, seconds); every surface class needs three runs for the splits
SUITE = [
    ("flat", "track_lap", 180.0),
    ("flat", "track_lap", 120.0),
    ("flat", "high_slip_corner", 30.0),
    ("flat", "launch", 12.0),
    ("flat", "slalom", 60.0),
    ("flat", "standstill", 10.0),
    ("gravel", "track_lap", 180.0),
    ("gravel", "slalom", 60.0),
    ("gravel", "launch", 12.0),
    ("wet", "track_lap", 180.0),
    ("wet", "track_lap", 120.0),
    ("wet", "slalom", 60.0),
    ("bumpy", "track_lap", 180.0),
    ("bumpy", "track_lap", 120.0),
    ("bumpy", "slalom", 60.0),
]


def build_suite(seed: int) -> list:
    return [
        ScenarioSpec(name=name, duration=duration, seed=seed + k, surface=surface)
        for k, (surface, name, duration) in enumerate(SUITE)
    ]


def main() -> int:
    parser = argparse.ArgumentParser(description="Desk-scale velocity estimation benchmark")
    parser.add_argument("--out", type=Path, default=Path(settings.OUTPUT_DIR) / "benchmark")
    parser.add_argument("--train-config", type=Path, default=None)
    parser.add_argument("--epochs", type=int, default=300)
    parser.add_argument("--workers", type=int, default=settings.MAX_WORKERS)
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    args = parser.parse_args()
    setup_logging()

    runs_dir, data_dir, models_dir = (args.out / d for d in ("runs", "datasets", "models"))

    specs = build_suite(args.seed)
    total = sum(s.resolved_duration() for s in specs)
    logger.info(f"Suite: {len(specs)} scenarios, {total / 60:.1f} simulated minutes")

    with log_performance("simulation", logger):
        results = simulate_suite(specs, args.workers)
    datasets = []
    with log_performance("dataset preparation", logger):
        for k, result in enumerate(results):
            run_dir = runs_dir / f"{k:02d}_{result.spec.name}_{result.spec.surface}"
            write_run(result, run_dir)
            dataset = prepare_run(run_dir, with_targets=True)
            datasets.append(dataset)

    grouped = assign_splits(datasets, seed=args.seed)
    for split, members in grouped.items():
        for dataset in members:
            write_dataset(dataset, data_dir / dataset.name)

    norm = compute_norm_stats(grouped["train"])
    base = load_key_value_config(args.train_config, TrainConfig) if args.train_config else TrainConfig()
    estimators = {"baseline": mkf_estimator("baseline"), "reference": mkf_estimator("reference")}
    networks = {}
    for preset in ("rnn1", "rnn2"):
        config = base.model_copy(update={"hidden_dims": preset, "max_epochs": args.epochs})
        train_windows = build_windows(grouped["train"], norm, config.input_steps, config.output_steps, config.stride)
        val_windows = build_windows(grouped["validation"], norm, config.input_steps, config.output_steps, config.stride)
        net, _ = train(config.build_network(), train_windows, val_windows, config,
                       history_path=models_dir / f"{preset}.history.csv")
        save_checkpoint(net, norm, models_dir / f"{preset}.ckpt")
        networks[preset] = net
        estimators[preset] = network_estimator(net, norm)

    for reference in ("targets", "ground_truth"):
        report = compare_estimators(grouped["test"], estimators, EvalConfig(reference=reference))
        export_report_csv(report, args.out / f"report_{reference}.csv")
        export_report_markdown(report, args.out / f"report_{reference}.md")
        print(f"\nAgainst {reference}:\n{report.to_markdown()}")
        if reference == "targets":
            baseline_vy = report.get("baseline", "vy").rmse
            checks = {
                "reference vy < baseline vy": report.get("reference", "vy").rmse < baseline_vy,
                "rnn1 vy <= baseline vy / 3": report.get("rnn1", "vy").rmse <= baseline_vy / 3.0,
                "rnn1 vx %err < baseline vx %err":
                    report.get("rnn1", "vx").percent_error < report.get("baseline", "vx").percent_error,
            }
            for name, ok in checks.items():
                print(f"  [{'OK' if ok else 'FAIL'}] {name}")

    cases = [run_case_study(case, CaseStudyConfig(seed=args.seed), networks["rnn1"], norm) for case in CASES]
    export_case_studies(cases, args.out / "case_studies")
    failed = [c.case for c in cases if not c.passed]
    for case in cases:
        print(f"{case.case}: {'PASS' if case.passed else 'FAIL'}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
