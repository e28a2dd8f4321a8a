import json

import pandas as pd

from velocity_estimation.evaluation.case_studies import CaseStudyResult
from velocity_estimation.evaluation.metrics import MetricReport, StateMetric
from velocity_estimation.utils.export import (
    export_case_studies,
    export_report_csv,
    export_report_json,
    export_report_markdown,
)


def sample_report():
    metrics = [
        StateMetric("baseline", "vy", 0.3, 20.0, 1.5, True),
        StateMetric("rnn1", "vy", 0.059, 3.91, 1.51, True),
    ]
    return MetricReport(metrics, reference="targets", warmup=200, n_samples=1000, datasets=["run_a"])


def sample_case():
    series = pd.DataFrame({"t": [0.0, 0.005], "truth_vy": [0.0, 0.1], "network_vy": [0.0, 0.09]})
    return CaseStudyResult("high_slip", "network vy RMSE <= 0.333 x baseline", True,
                           {"network_vy_rmse": 0.05, "baseline_vy_rmse": 0.3}, series)


def test_report_csv(tmp_path):
    path = export_report_csv(sample_report(), tmp_path / "report.csv")
    table = pd.read_csv(path)
    assert table["estimator"].tolist() == ["baseline", "rnn1"]
    assert table.loc[1, "rmse"] == 0.059


def test_report_json(tmp_path):
    path = export_report_json(sample_report(), tmp_path / "out" / "report.json")
    data = json.loads(path.read_text())
    assert "timestamp" in data
    assert data["report"]["n_samples"] == 1000
    assert data["report"]["metrics"][1]["estimator"] == "rnn1"


def test_report_markdown_with_cases(tmp_path):
    path = export_report_markdown(sample_report(), tmp_path / "report.md", cases=[sample_case()])
    text = path.read_text()
    assert "**Compared against:** targets" in text
    assert "| rnn1 | 0.059 (3.91%) |" in text
    assert "### high_slip: PASS" in text


def test_case_study_files(tmp_path):
    out = export_case_studies([sample_case()], tmp_path / "cases")
    assert json.loads((out / "case_studies.json").read_text())["cases"][0]["passed"] is True
    assert "- network_vy_rmse: 0.05" in (out / "case_studies.md").read_text()
    assert pd.read_csv(out / "high_slip_series.csv").shape == (2, 3)
