"""Metrics, estimator comparison, along-track error and case studies."""

from velocity_estimation.evaluation.case_studies import (  # noqa: F401
    CASES,
    CaseStudyConfig,
    CaseStudyResult,
    run_case_study,
)
from velocity_estimation.evaluation.metrics import (  # noqa: F401
    EvalConfig,
    MetricReport,
    compare_estimators,
    percent_error,
    rmse,
)
from velocity_estimation.evaluation.track import error_along_track  # noqa: F401
