"""Data types for flow traces, per-flow statistics and PS classification."""

from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import groupby
from typing import NewType

from .errors import InvalidParameterError

FlowKey = NewType("FlowKey", int)

MAX_FLOW_KEY = (1 << 64) - 1


def flow_key(value: int) -> FlowKey:
    """Validate a flow identifier as an unsigned 64-bit integer.

    Args:
        value: Candidate identifier

    Returns:
        The same value typed as FlowKey

    Raises:
        InvalidParameterError: If the value does not fit in 64 unsigned bits
    """
    if not 0 <= value <= MAX_FLOW_KEY:
        raise InvalidParameterError(f"flow key must fit in 64 unsigned bits, got {value}")
    return FlowKey(value)


@dataclass(frozen=True, slots=True)
class PacketRecord:
    """One trace event: the flow it belongs to and its window index."""

    flow: FlowKey
    window: int


@dataclass(frozen=True)
class WindowedTrace:
    """An ordered packet stream with non-decreasing window indices.

    window_size is set when windows were derived by count-based partitioning and
    left as None when the trace carried explicit window indices.
    """

    records: tuple[PacketRecord, ...] = ()
    window_size: int | None = None

    def __post_init__(self):
        previous = 0
        for position, record in enumerate(self.records):
            if record.window < previous:
                raise InvalidParameterError(
                    f"window indices must be non-decreasing (record {position}: "
                    f"{record.window} after {previous})"
                )
            previous = record.window

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PacketRecord]:
        return iter(self.records)

    @property
    def num_windows(self) -> int:
        """Number of window indices spanned (last index + 1), 0 for an empty trace."""
        if not self.records:
            return 0
        return self.records[-1].window + 1

    def windows(self) -> Iterator[tuple[int, list[FlowKey]]]:
        """Yield (window index, flows in stream order) for every non-empty window."""
        for window, group in groupby(self.records, key=lambda r: r.window):
            yield window, [r.flow for r in group]

    def flows(self) -> list[FlowKey]:
        """Flow keys in stream order."""
        return [r.flow for r in self.records]

    def shifted(self, offset: int) -> "WindowedTrace":
        """Return a copy whose window indices are moved by offset."""
        return WindowedTrace(
            tuple(PacketRecord(r.flow, r.window + offset) for r in self.records),
            self.window_size,
        )

    def concat(self, other: "WindowedTrace") -> "WindowedTrace":
        """Append other after this trace, shifting its windows past ours."""
        shifted = other.shifted(self.num_windows)
        return WindowedTrace(self.records + shifted.records, None)

    @classmethod
    def from_pairs(cls, pairs, window_size: int | None = None) -> "WindowedTrace":
        """Build a trace from (flow, window) pairs."""
        return cls(tuple(PacketRecord(flow_key(f), int(w)) for f, w in pairs), window_size)


@dataclass(frozen=True, slots=True)
class FlowStats:
    """Frequency and persistence of one flow; density is derived."""

    frequency: int
    persistence: int

    def __post_init__(self):
        if not self.frequency >= self.persistence >= 0:
            raise InvalidParameterError(
                f"flow statistics need f >= p >= 0, got f={self.frequency}, p={self.persistence}"
            )

    @property
    def density(self) -> Fraction | None:
        """Exact f/p, or None when the flow never appeared."""
        if self.persistence == 0:
            return None
        return Fraction(self.frequency, self.persistence)

    @property
    def density_value(self) -> float:
        """f/p as a float (0.0 when p == 0)."""
        if self.persistence == 0:
            return 0.0
        return self.frequency / self.persistence

    def __add__(self, other: "FlowStats") -> "FlowStats":
        return FlowStats(self.frequency + other.frequency, self.persistence + other.persistence)


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    # str() keeps 1.2 as exactly 6/5 instead of its binary approximation
    return Fraction(str(value))


@dataclass(frozen=True)
class Criterion:
    """The anomaly boundary: p >= p0 and f/p <= d0 (both inclusive)."""

    p0: int
    d0: Fraction

    def __post_init__(self):
        object.__setattr__(self, "d0", _as_fraction(self.d0))
        if self.p0 < 1:
            raise InvalidParameterError(f"p0 must be >= 1, got {self.p0}")
        if self.d0 < 1:
            raise InvalidParameterError(f"d0 must be >= 1, got {self.d0}")

    def is_persistent(self, stats: FlowStats) -> bool:
        return stats.persistence >= self.p0

    def is_sparse(self, stats: FlowStats) -> bool:
        """f/p <= d0, evaluated exactly on integers."""
        return stats.persistence > 0 and stats.frequency <= self.d0 * stats.persistence

    def is_ps(self, stats: FlowStats) -> bool:
        return self.is_persistent(stats) and self.is_sparse(stats)

    def to_dict(self) -> dict:
        return {"p0": self.p0, "d0": float(self.d0)}


@dataclass(frozen=True)
class ReportSet:
    """Flows a detector reports, split into PS and persistent-only."""

    stats: Mapping[FlowKey, FlowStats] = field(default_factory=dict)
    ps: frozenset[FlowKey] = frozenset()
    persistent: frozenset[FlowKey] = frozenset()

    @property
    def reported(self) -> frozenset[FlowKey]:
        return self.ps | self.persistent

    @classmethod
    def classify(cls, stats: Mapping[FlowKey, FlowStats], criterion: Criterion) -> "ReportSet":
        """Split reported statistics by the criterion.

        Flows meeting both thresholds are PS; everything else reported is
        persistent-only.
        """
        ps = frozenset(key for key, s in stats.items() if criterion.is_ps(s))
        return cls(dict(stats), ps, frozenset(stats) - ps)
