"""Window partitioning, exact ground-truth counting and answer-set extraction."""

from collections.abc import Iterable, Mapping

from .errors import InvalidParameterError
from .types import Criterion, FlowKey, FlowStats, PacketRecord, WindowedTrace, flow_key


def partition_windows(events: Iterable[int], window_size: int) -> WindowedTrace:
    """Assign count-based windows: record i gets window i // window_size.

    Args:
        events: Flow keys in stream order
        window_size: Packets per window (t)

    Returns:
        WindowedTrace with derived window indices

    Raises:
        InvalidParameterError: If window_size < 1
    """
    if window_size < 1:
        raise InvalidParameterError(f"window size must be >= 1, got {window_size}")
    records = tuple(
        PacketRecord(flow_key(key), index // window_size) for index, key in enumerate(events)
    )
    return WindowedTrace(records, window_size)


def exact_stats(trace: WindowedTrace) -> dict[FlowKey, FlowStats]:
    """Exact frequency and persistence of every flow in the trace."""
    frequency: dict[FlowKey, int] = {}
    persistence: dict[FlowKey, int] = {}
    last_window: dict[FlowKey, int] = {}
    for record in trace.records:
        key = record.flow
        frequency[key] = frequency.get(key, 0) + 1
        # windows are non-decreasing, so a new window for this key means +1 persistence
        if last_window.get(key) != record.window:
            last_window[key] = record.window
            persistence[key] = persistence.get(key, 0) + 1
    return {key: FlowStats(frequency[key], persistence[key]) for key in frequency}


def answer_set(stats: Mapping[FlowKey, FlowStats], criterion: Criterion) -> set[FlowKey]:
    """Flows with p >= p0 and f/p <= d0."""
    return {key for key, s in stats.items() if criterion.is_ps(s)}
