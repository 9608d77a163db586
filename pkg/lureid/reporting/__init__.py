"""Evaluation reports and the tables behind the exported plot data."""

from lureid.trainer.parameters import count_parameters

from .report import (
    SUMMARY_COLUMNS,
    EvalReport,
    Predictions,
    certificate_status,
    evaluate,
    phase_table,
    polytope_table,
    predict,
    region_bounds,
    region_table,
    summary_table,
)

__all__ = [
    "SUMMARY_COLUMNS",
    "EvalReport",
    "Predictions",
    "certificate_status",
    "count_parameters",
    "evaluate",
    "phase_table",
    "polytope_table",
    "predict",
    "region_bounds",
    "region_table",
    "summary_table",
]
