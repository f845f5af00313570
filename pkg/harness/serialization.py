"""CSV and JSON writers for results, histograms and reports."""

import csv
import json
from collections.abc import Iterable
from pathlib import Path
from typing import Any

from .distribution import Bin
from .metrics import CSV_FIELDS, MetricsRecord


def _csv_value(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def write_metrics_csv(records: Iterable[MetricsRecord], path: str | Path) -> None:
    """One row per record with the fixed CSV_FIELDS header."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow({k: _csv_value(v) for k, v in record.to_row().items()})


def write_json(data: Any, path: str | Path) -> None:
    """Stable JSON: sorted keys, two-space indent, trailing newline."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=str)
        f.write("\n")


def metrics_json(records: Iterable[MetricsRecord], **metadata: Any) -> dict[str, Any]:
    return {"metadata": metadata, "results": [r.to_dict() for r in records]}


def write_histogram_csv(bins: Iterable[Bin], path: str | Path) -> None:
    """bin_low,bin_high,count rows; an open top bin is written as inf."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["bin_low", "bin_high", "count"])
        for b in bins:
            writer.writerow([b.low, "inf" if b.high is None else b.high, b.count])
