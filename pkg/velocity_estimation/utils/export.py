"""Export utilities for evaluation reports.

Metric reports and case-study results are written as JSON, Markdown and
CSV. Paths default to timestamped files under ``settings.OUTPUT_DIR``.
"""
from __future__ import annotations

import json
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from velocity_estimation.core.config import settings
from velocity_estimation.evaluation.case_studies import CaseStudyResult
from velocity_estimation.evaluation.metrics import MetricReport


def _default_path(stem: str, suffix: str) -> Path:
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return Path(settings.OUTPUT_DIR) / f"{stem}_{timestamp}{suffix}"


def _prepare(path: Optional[Path], stem: str, suffix: str) -> Path:
    path = Path(path) if path is not None else _default_path(stem, suffix)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def export_report_json(report: MetricReport, output_path: Optional[Path] = None) -> Path:
    """
    Export a metric report to JSON.

    Args:
        report: Pooled metrics per estimator and state
        output_path: Optional path for output file

    Returns:
        Path to the exported file
    """
    output_path = _prepare(output_path, "report", ".json")
    export_data = {
        "timestamp": datetime.now().isoformat(),
        "report": report.to_dict(),
    }
    with output_path.open("w", encoding="utf-8") as f:
        json.dump(export_data, f, indent=2)
    return output_path


def export_report_csv(report: MetricReport, output_path: Optional[Path] = None) -> Path:
    """One row per (estimator, state)."""
    output_path = _prepare(output_path, "report", ".csv")
    report.to_frame().to_csv(output_path, index=False, float_format="%.6f")
    return output_path


def export_report_markdown(
    report: MetricReport,
    output_path: Optional[Path] = None,
    cases: Sequence[CaseStudyResult] = (),
) -> Path:
    """
    Export a metric report (and optional case-study outcomes) to Markdown.

    Returns:
        Path to the exported file
    """
    output_path = _prepare(output_path, "report", ".md")
    md_content = f"""# Velocity Estimation Report

**Generated:** {datetime.now().strftime("%Y-%m-%d %H:%M:%S")}

**Compared against:** {report.reference} ({report.n_samples} samples after {report.warmup} warm-up frames)

**Datasets:** {", ".join(report.datasets) or "N/A"}

---

## RMSE (percent error)

{report.to_markdown()}

---
"""
    if cases:
        md_content += "\n" + case_studies_markdown(cases) + "\n"
    with output_path.open("w", encoding="utf-8") as f:
        f.write(md_content)
    return output_path


def case_studies_markdown(cases: Sequence[CaseStudyResult]) -> str:
    lines = ["## Case studies", ""]
    for result in cases:
        status = "PASS" if result.passed else "FAIL"
        lines.append(f"### {result.case}: {status}")
        lines.append("")
        lines.append(f"Criterion: {result.criterion}")
        lines.append("")
        for key, value in result.summary.items():
            lines.append(f"- {key}: {value:.6g}" if isinstance(value, float) else f"- {key}: {value}")
        lines.append("")
    return "\n".join(lines)


def export_case_studies(
    cases: Sequence[CaseStudyResult],
    output_dir: Optional[Path] = None,
) -> Path:
    """
    Write ``case_studies.json``, ``case_studies.md`` and one
    ``<case>_series.csv`` per case into ``output_dir``.

    Returns:
        The output directory
    """
    output_dir = Path(output_dir) if output_dir is not None else Path(settings.OUTPUT_DIR) / "case_studies"
    output_dir.mkdir(parents=True, exist_ok=True)
    with (output_dir / "case_studies.json").open("w", encoding="utf-8") as f:
        json.dump({
            "timestamp": datetime.now().isoformat(),
            "cases": [result.to_dict() for result in cases],
        }, f, indent=2)
    (output_dir / "case_studies.md").write_text(case_studies_markdown(cases), encoding="utf-8")
    for result in cases:
        if isinstance(result.series, pd.DataFrame) and not result.series.empty:
            result.series.to_csv(output_dir / f"{result.case}_series.csv", index=False, float_format="%.6f")
    return output_dir
