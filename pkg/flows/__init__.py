"""Flow trace model: types, window partitioning, exact counting and trace files."""

from .errors import ConfigurationError, ConsistencyError, InvalidParameterError, TraceFormatError
from .io import read_trace, write_trace
from .model import answer_set, exact_stats, partition_windows
from .types import (
    Criterion,
    FlowKey,
    FlowStats,
    PacketRecord,
    ReportSet,
    WindowedTrace,
    flow_key,
)

__all__ = [
    "ConfigurationError",
    "ConsistencyError",
    "Criterion",
    "FlowKey",
    "FlowStats",
    "InvalidParameterError",
    "PacketRecord",
    "ReportSet",
    "TraceFormatError",
    "WindowedTrace",
    "answer_set",
    "exact_stats",
    "flow_key",
    "partition_windows",
    "read_trace",
    "write_trace",
]
