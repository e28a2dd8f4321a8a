"""Command-line entry points.

Usage:
    python -m velocity_estimation simulate --scenario launch --seed 3 --out runs/launch_3
    python -m velocity_estimation prepare --raw runs/launch_3 --out datasets/launch_3 --with-targets
    python -m velocity_estimation train --config configs/train.txt --data datasets --checkpoint models/rnn1.ckpt
    python -m velocity_estimation estimate --checkpoint models/rnn1.ckpt --data datasets/launch_3 --out est.csv
    python -m velocity_estimation evaluate --data datasets --estimators baseline,reference,rnn1=models/rnn1.ckpt --report out
    python -m velocity_estimation casestudy --case all --checkpoint models/rnn1.ckpt --report out
    python -m velocity_estimation sweep --data datasets --grid configs/sweep.txt --epochs 50 --out out
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from velocity_estimation.core.config import load_key_value_config, settings
from velocity_estimation.core.exceptions import UsageError, VelocityEstimationError
from velocity_estimation.data.io import prepare_run, read_datasets, write_dataset
from velocity_estimation.data.normalization import compute_norm_stats
from velocity_estimation.data.splits import assign_splits
from velocity_estimation.data.windows import build_windows
from velocity_estimation.evaluation.case_studies import CASES, CaseStudyConfig, run_case_study
from velocity_estimation.evaluation.metrics import (
    EvalConfig,
    Estimator,
    compare_estimators,
    mkf_estimator,
    network_estimator,
)
from velocity_estimation.evaluation.track import error_along_track, write_track_error
from velocity_estimation.filters.io import write_estimates
from velocity_estimation.filters.mkf import run_filter
from velocity_estimation.filters.state import MkfConfig
from velocity_estimation.network.checkpoint import load_checkpoint, save_checkpoint
from velocity_estimation.network.inference import predict_stream, predictions_to_frame
from velocity_estimation.network.sweep import load_grid, run_sweep
from velocity_estimation.network.training import TrainConfig, train
from velocity_estimation.sim.io import write_csv, write_run
from velocity_estimation.sim.params import SensorFaultPlan, VehicleParams
from velocity_estimation.sim.scenarios import SCENARIOS, ScenarioSpec, simulate
from velocity_estimation.utils.export import (
    export_case_studies,
    export_report_csv,
    export_report_json,
    export_report_markdown,
)
from velocity_estimation.utils.logging import get_logger, log_function_call, setup_logging

logger = get_logger(__name__)

MKF_MODES = ("baseline", "reference")


def _optional_config(path: Optional[str], model):
    return load_key_value_config(path, model) if path else model()


@log_function_call()
def cmd_simulate(args: argparse.Namespace) -> int:
    spec = ScenarioSpec(name=args.scenario, duration=args.duration, seed=args.seed,
                        surface=args.surface, randomize_bias=not args.no_bias)
    params = _optional_config(args.vehicle_config, VehicleParams)
    plan = load_key_value_config(args.fault_config, SensorFaultPlan) if args.fault_config else None
    result = simulate(spec, params, plan)
    write_run(result, args.out)
    return 0


@log_function_call()
def cmd_prepare(args: argparse.Namespace) -> int:
    config = _optional_config(args.mkf_config, MkfConfig)
    dataset = prepare_run(args.raw, with_targets=args.with_targets, config=config)
    write_dataset(dataset, args.out)
    return 0


@log_function_call()
def cmd_train(args: argparse.Namespace) -> int:
    config = _optional_config(args.config, TrainConfig)
    grouped = assign_splits(read_datasets(args.data), seed=args.split_seed)
    norm = compute_norm_stats(grouped["train"])
    train_windows = build_windows(grouped["train"], norm, config.input_steps, config.output_steps, config.stride)
    val_windows = build_windows(grouped["validation"], norm, config.input_steps, config.output_steps, config.stride)
    net = config.build_network()
    history_path = args.history or Path(args.checkpoint).with_suffix(".history.csv")
    net, history = train(net, train_windows, val_windows, config, history_path=history_path)
    save_checkpoint(net, norm, args.checkpoint)
    for split in ("train", "test", "validation"):
        logger.info(f"{split}: {[d.name for d in grouped[split]]}")
    logger.info(f"Best validation loss {history.best_val_loss:.6f} at epoch {history.best_epoch}")
    return 0


@log_function_call()
def cmd_estimate(args: argparse.Namespace) -> int:
    datasets = read_datasets(args.data)
    if len(datasets) != 1:
        raise UsageError(f"estimate expects one dataset directory, found {len(datasets)}")
    frames = datasets[0].frames
    if args.checkpoint:
        net, norm = load_checkpoint(args.checkpoint)
        estimates = predict_stream(net, norm, frames)
        write_csv(predictions_to_frame(frames["t"], estimates), args.out)
    else:
        config = _optional_config(args.mkf_config, MkfConfig)
        write_estimates(run_filter(frames, args.mkf_mode, config), args.out)
    return 0


def parse_estimators(items: Sequence[str], mkf_config: Optional[MkfConfig] = None) -> Dict[str, Estimator]:
    """``baseline``/``reference`` filter modes or ``name=checkpoint`` networks."""
    estimators: Dict[str, Estimator] = {}
    for item in items:
        name, _, path = item.partition("=")
        name = name.strip()
        if path:
            net, norm = load_checkpoint(path.strip())
            estimators[name] = network_estimator(net, norm)
        elif name in MKF_MODES:
            estimators[name] = mkf_estimator(name, mkf_config)
        else:
            raise UsageError(f"Unknown estimator {name!r}: use {MKF_MODES} or name=checkpoint")
    return estimators


@log_function_call()
def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _optional_config(args.config, EvalConfig)
    if args.reference:
        config = config.model_copy(update={"reference": args.reference})
    items = args.estimators.split(",") if args.estimators else config.estimators
    datasets = read_datasets(args.data)
    if args.split:
        datasets = [d for d in datasets if d.split == args.split]
        if not datasets:
            raise UsageError(f"No datasets tagged {args.split!r} under {args.data}")
    estimators = parse_estimators(items, _optional_config(args.mkf_config, MkfConfig))
    report = compare_estimators(datasets, estimators, config)

    report_dir = Path(args.report)
    export_report_csv(report, report_dir / "report.csv")
    export_report_markdown(report, report_dir / "report.md")
    export_report_json(report, report_dir / "report.json")
    if args.track_error:
        for dataset in datasets:
            if dataset.ground_truth is None:
                continue
            for name, estimator in estimators.items():
                vy = estimator(dataset)[:, 1]
                table = error_along_track(vy, dataset.ground_truth, config.warmup)
                write_track_error(table, report_dir / "track" / f"{dataset.name}_{name}.csv")
    print(report.to_markdown())
    return 0


@log_function_call()
def cmd_casestudy(args: argparse.Namespace) -> int:
    config = _optional_config(args.config, CaseStudyConfig)
    if args.checkpoint:
        config = config.model_copy(update={"checkpoint": Path(args.checkpoint)})
    cases: List[str] = list(CASES) if args.case == "all" else [args.case]
    net, norm = load_checkpoint(config.checkpoint) if config.checkpoint else (None, None)
    mkf_config = _optional_config(args.mkf_config, MkfConfig)
    results = [run_case_study(case, config, net, norm, mkf_config) for case in cases]
    export_case_studies(results, Path(args.report))
    failed = [r.case for r in results if not r.passed]
    for result in results:
        print(f"{result.case}: {'PASS' if result.passed else 'FAIL'} ({result.criterion})")
    if failed:
        logger.error(f"Case criteria failed: {failed}")
        return 1
    return 0


@log_function_call()
def cmd_sweep(args: argparse.Namespace) -> int:
    base = _optional_config(args.config, TrainConfig)
    grouped = assign_splits(read_datasets(args.data), seed=args.split_seed)
    norm = compute_norm_stats(grouped["train"])
    table = run_sweep(load_grid(args.grid), grouped["train"], grouped["validation"], norm,
                      base, max_epochs=args.epochs, output_dir=args.out)
    print(table.to_string(index=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="velocity_estimation",
                                     description="Vehicle velocity estimation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Simulate a scenario and write raw sensor CSVs")
    p.add_argument("--scenario", required=True, choices=SCENARIOS)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--surface", default="flat", choices=("flat", "gravel", "bumpy", "wet"))
    p.add_argument("--no-bias", action="store_true", help="Do not draw random IMU biases")
    p.add_argument("--vehicle-config")
    p.add_argument("--fault-config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("prepare", help="Synchronize a run to 200 Hz frames")
    p.add_argument("--raw", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--with-targets", action="store_true")
    p.add_argument("--mkf-config")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="Train a GRU network")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--history")
    p.add_argument("--split-seed", type=int, default=settings.DEFAULT_SEED)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("estimate", help="Run a network or the filter over one dataset")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--checkpoint")
    source.add_argument("--mkf-mode", choices=MKF_MODES)
    p.add_argument("--mkf-config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="Compare estimators and write a report")
    p.add_argument("--data", required=True)
    p.add_argument("--estimators", help="Comma list of baseline, reference, name=checkpoint")
    p.add_argument("--report", required=True)
    p.add_argument("--config")
    p.add_argument("--mkf-config")
    p.add_argument("--reference", choices=("targets", "ground_truth"))
    p.add_argument("--split", choices=("train", "test", "validation"))
    p.add_argument("--track-error", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("casestudy", help="Run case studies; exits 1 when a criterion fails")
    p.add_argument("--case", required=True, choices=(*CASES, "all"))
    p.add_argument("--checkpoint")
    p.add_argument("--config")
    p.add_argument("--mkf-config")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_casestudy)

    p = sub.add_parser("sweep", help="Grid over training hyper-parameters")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--config")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--split-seed", type=int, default=settings.DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VelocityEstimationError as e:
        logger.error(f"{args.command} failed: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
