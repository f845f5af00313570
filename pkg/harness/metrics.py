"""Accuracy metrics: precision, recall, F1 and average relative error."""

from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from typing import Any

from flows.model import answer_set, exact_stats
from flows.types import Criterion, FlowKey, FlowStats, ReportSet, WindowedTrace

# Fixed CSV header of result rows
CSV_FIELDS = [
    "detector",
    "config_digest",
    "memory_bits",
    "p0",
    "d0",
    "bucket_width",
    "memory_kb",
    "precision",
    "recall",
    "f1",
    "are_f",
    "are_p",
    "are",
    "reported",
    "true_ps",
    "true_positives",
    "throughput_pps",
    "error",
]


@dataclass(frozen=True)
class GroundTruth:
    """Exact statistics of a trace and its PS answer set."""

    stats: Mapping[FlowKey, FlowStats]
    answer: frozenset[FlowKey]

    @classmethod
    def from_trace(cls, trace: WindowedTrace, criterion: Criterion) -> "GroundTruth":
        stats = exact_stats(trace)
        return cls(stats, frozenset(answer_set(stats, criterion)))

    def for_criterion(self, criterion: Criterion) -> "GroundTruth":
        """Same statistics, answer set recomputed for another criterion."""
        return GroundTruth(self.stats, frozenset(answer_set(self.stats, criterion)))


@dataclass
class MetricsRecord:
    """One result row.

    ARE is computed over every flow the detector reports (PS or
    persistent-only), separately for f and p; `are` is their mean.
    """

    detector: str
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    are_f: float | None = None
    are_p: float | None = None
    are: float | None = None
    reported: int = 0
    true_ps: int = 0
    true_positives: int = 0
    throughput_pps: float | None = None
    memory_bits: int = 0
    config_digest: str = ""
    config: dict[str, Any] = field(default_factory=dict)
    extras: dict[str, Any] = field(default_factory=dict)
    error: str | None = None

    def to_row(self) -> dict[str, Any]:
        """Flat row with the CSV_FIELDS columns."""
        values = asdict(self)
        row = {name: values.get(name) for name in CSV_FIELDS}
        for name in ("p0", "d0", "bucket_width", "memory_kb"):
            row[name] = self.config.get(name)
        return row

    def to_dict(self, include_throughput: bool = True) -> dict[str, Any]:
        values = asdict(self)
        if not include_throughput:
            values.pop("throughput_pps")
        return values


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def average_relative_error(pairs: list[tuple[int, int]]) -> float | None:
    """Mean |y - y_hat| / y over (y, y_hat) pairs with y > 0."""
    usable = [(y, est) for y, est in pairs if y > 0]
    if not usable:
        return None
    return sum(abs(y - est) / y for y, est in usable) / len(usable)


def score(report: ReportSet, truth: GroundTruth, detector: str = "") -> MetricsRecord:
    """Compare a detector's report with the ground truth.

    Precision is 0 for an empty report and recall 0 for a non-empty report
    against an empty truth. An empty report against an empty truth is a
    perfect match: precision, recall and F1 are all 1.
    """
    predicted = report.ps
    hits = len(predicted & truth.answer)

    if not predicted and not truth.answer:
        precision = recall = 1.0
    else:
        precision = hits / len(predicted) if predicted else 0.0
        recall = hits / len(truth.answer) if truth.answer else 0.0

    f_pairs, p_pairs = [], []
    for key, estimate in report.stats.items():
        exact = truth.stats.get(key)
        if exact is None:
            continue
        f_pairs.append((exact.frequency, estimate.frequency))
        p_pairs.append((exact.persistence, estimate.persistence))
    are_f = average_relative_error(f_pairs)
    are_p = average_relative_error(p_pairs)
    combined = None if are_f is None or are_p is None else (are_f + are_p) / 2

    return MetricsRecord(
        detector=detector,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        are_f=are_f,
        are_p=are_p,
        are=combined,
        reported=len(predicted),
        true_ps=len(truth.answer),
        true_positives=hits,
    )
