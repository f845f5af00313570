"""Evaluation harness: metrics, runs, sweeps and distribution reports."""

from .distribution import Bin, DistributionReport, distribution_report
from .metrics import CSV_FIELDS, GroundTruth, MetricsRecord, score
from .runner import (
    DETECTORS,
    ExperimentConfig,
    RunResult,
    build_detector,
    feed,
    measure_throughput,
    run_experiment,
)
from .sweep import expand_grid, parse_range, sweep

__all__ = [
    "CSV_FIELDS",
    "DETECTORS",
    "Bin",
    "DistributionReport",
    "ExperimentConfig",
    "GroundTruth",
    "MetricsRecord",
    "RunResult",
    "build_detector",
    "distribution_report",
    "expand_grid",
    "feed",
    "measure_throughput",
    "parse_range",
    "run_experiment",
    "score",
    "sweep",
]
