"""Configuration, entry and outcome types for PSSketch."""

from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, NamedTuple

from flows.errors import ConfigurationError
from flows.types import Criterion, FlowKey


class InsertOutcome(str, Enum):
    """Which insert path ran for one arrival."""

    UPDATED = "updated"
    CREATED = "created"
    REPLACED = "replaced"
    DROPPED = "dropped"
    ELIMINATED = "eliminated"
    PROTECTED = "protected"
    PRUNED = "pruned"


class ReportOutcome(str, Enum):
    """Result of reporting an overflow to the Protection Layer."""

    CREATED = "created"
    UPDATED = "updated"
    EVICTED_OTHER = "evicted_other"
    PRUNED_SELF = "pruned_self"


class Overflow(str, Enum):
    """Which Competition Layer counter overflowed."""

    F_OVERFLOW = "f"
    P_OVERFLOW = "p"


@dataclass(frozen=True)
class WidthConfig:
    """Counter bit-widths of both layers.

    p_overflow_threshold is the value at which the CL persistence counter
    reports to the Protection Layer; None means 2^p_bits.
    """

    FLAG_BITS: ClassVar[int] = 2

    fp_bits: int = 16
    f_bits: int = 8
    p_bits: int = 6
    fof_bits: int = 8
    pof_bits: int = 8
    p_overflow_threshold: int | None = None

    def __post_init__(self):
        if not 1 <= self.fp_bits <= 64:
            raise ConfigurationError(f"fp_bits must be in [1, 64], got {self.fp_bits}")
        for name in ("f_bits", "p_bits"):
            value = getattr(self, name)
            if not 1 <= value <= 16:
                raise ConfigurationError(f"{name} must be in [1, 16], got {value}")
        for name in ("fof_bits", "pof_bits"):
            value = getattr(self, name)
            if not 1 <= value <= 32:
                raise ConfigurationError(f"{name} must be in [1, 32], got {value}")
        if self.p_overflow_threshold is None:
            object.__setattr__(self, "p_overflow_threshold", 1 << self.p_bits)
        if not 2 <= self.p_overflow_threshold <= (1 << self.p_bits):
            raise ConfigurationError(
                f"p_overflow_threshold must be in [2, 2^p_bits={1 << self.p_bits}], "
                f"got {self.p_overflow_threshold}"
            )

    @property
    def f_limit(self) -> int:
        """Value at which the CL frequency counter overflows (2^f_bits)."""
        return 1 << self.f_bits

    @property
    def p_limit(self) -> int:
        return self.p_overflow_threshold  # type: ignore[return-value]

    @property
    def fof_max(self) -> int:
        return (1 << self.fof_bits) - 1

    @property
    def pof_max(self) -> int:
        return (1 << self.pof_bits) - 1

    @property
    def fp_mask(self) -> int:
        return (1 << self.fp_bits) - 1

    @property
    def entry_bits(self) -> int:
        """Bits of one Competition Layer entry."""
        return self.fp_bits + self.f_bits + self.p_bits + self.FLAG_BITS


@dataclass(frozen=True)
class SketchConfig:
    """Sizes, widths, criterion, seeds and optimization toggles of one sketch."""

    x: int
    y: int = 32
    r: int = 500
    widths: WidthConfig = field(default_factory=WidthConfig)
    criterion: Criterion = field(default_factory=lambda: Criterion(50, 1.2))
    hash_seed: int = 0
    rng_seed: int = 0
    burst_elimination: bool = True
    prune: bool = True
    vectorized_scan: bool = False

    # f_of increments allowed per flow per window under burst elimination
    BURST_CAP: ClassVar[int] = 2

    def __post_init__(self):
        for name in ("x", "y", "r"):
            value = getattr(self, name)
            if value < 1:
                raise ConfigurationError(f"{name.upper()} must be >= 1, got {value}")

    @property
    def memory_bits(self) -> int:
        from .space import memory_bits

        return memory_bits(self.x, self.y, self.r, self.widths)


@dataclass(frozen=True, slots=True)
class CompetitionEntry:
    """Snapshot of one Competition Layer slot (fp == 0 means empty)."""

    fp: int
    f: int
    p: int
    flag_w: int
    flag_of: int

    @property
    def empty(self) -> bool:
        return self.fp == 0


@dataclass(slots=True)
class ProtectionEntry:
    """Protection Layer record of one protected flow.

    bucket and fp locate the flow's Competition Layer entry.
    """

    id: FlowKey
    bucket: int
    fp: int
    f_of: int = 0
    p_of: int = 1
    window_fof_increments: int = 0


class ScanResult(NamedTuple):
    """Bucket scan triple; -1 marks "none"."""

    found: int
    empty: int
    min_p_index: int
    min_p: int


@dataclass
class SketchCounters:
    """Per-outcome tallies, for diagnostics and logging."""

    inserts: int = 0
    updated: int = 0
    created: int = 0
    replaced: int = 0
    dropped: int = 0
    eliminated: int = 0
    protected: int = 0
    pruned: int = 0
    pl_evictions: int = 0
    saturated: int = 0
    burst_suppressed: int = 0

    def to_dict(self) -> dict[str, int]:
        return dict(self.__dict__)
