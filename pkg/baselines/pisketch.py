"""PISketch and its density-mode variant.

Each flow is tracked by a weight W: +L on its first packet in a window, -1 on
every later packet in that window. A per-window presence filter decides
"first in window". Cells also keep frequency and persistence so the same
structure can be queried by weight (PISketch) or by density
(PISketch-Density).
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from flows.errors import ConfigurationError
from flows.hashing import derive_seed, hash64
from flows.types import Criterion, FlowKey, FlowStats, ReportSet
from sketch.base import Detector
from sketch.types import WidthConfig

from .base import RowHasher

ID_BITS = 64


class PiQueryMode(str, Enum):
    WEIGHT = "weight"
    DENSITY = "density"


def default_weight_threshold(weight_increment: int, criterion: Criterion) -> int:
    """Smallest weight of a flow with persistence p0 and density d0.

    After p windows and f packets a flow's weight is (L + 1) * p - f, i.e.
    p * (L + 1 - d).
    """
    return math.ceil((weight_increment + 1 - criterion.d0) * criterion.p0)


@dataclass(frozen=True)
class PiSketchConfig:
    buckets: int
    cells_per_bucket: int = 8
    weight_increment: int = 8
    weight_bits: int = 24
    freq_bits: int = 16
    pers_bits: int = 14
    filter_bits: int = 1 << 16
    filter_hashes: int = 2
    mode: PiQueryMode = PiQueryMode.WEIGHT
    weight_threshold: int | None = None
    criterion: Criterion = field(default_factory=lambda: Criterion(50, 1.2))
    seed: int = 0

    def __post_init__(self):
        if self.weight_increment <= 1:
            raise ConfigurationError(f"weight increment L must be > 1, got {self.weight_increment}")
        if self.buckets < 1 or self.cells_per_bucket < 1:
            raise ConfigurationError("PISketch needs at least one bucket and one cell per bucket")
        if self.filter_bits < 1 or self.filter_hashes < 1:
            raise ConfigurationError("presence filter needs >= 1 bit and >= 1 hash")
        if self.weight_threshold is None:
            object.__setattr__(
                self,
                "weight_threshold",
                default_weight_threshold(self.weight_increment, self.criterion),
            )

    @property
    def cells(self) -> int:
        return self.buckets * self.cells_per_bucket

    @property
    def cell_bits(self) -> int:
        return ID_BITS + self.weight_bits + self.freq_bits + self.pers_bits

    @property
    def memory_bits(self) -> int:
        return self.cells * self.cell_bits + self.filter_bits

    @classmethod
    def for_budget(
        cls,
        memory_bits: int,
        criterion: Criterion,
        mode: PiQueryMode = PiQueryMode.WEIGHT,
        weight_increment: int = 8,
        cells_per_bucket: int = 8,
        filter_fraction: float = 0.25,
        filter_hashes: int = 2,
        weight_threshold: int | None = None,
        seed: int = 0,
    ) -> "PiSketchConfig":
        """Give filter_fraction of the budget to the presence filter, the rest to cells."""
        filter_bits = max(1, int(memory_bits * filter_fraction))
        cell_bits = ID_BITS + 24 + 16 + 14
        buckets = max(1, (memory_bits - filter_bits) // (cell_bits * cells_per_bucket))
        return cls(
            buckets=buckets,
            cells_per_bucket=cells_per_bucket,
            weight_increment=weight_increment,
            filter_bits=filter_bits,
            filter_hashes=filter_hashes,
            mode=mode,
            weight_threshold=weight_threshold,
            criterion=criterion,
            seed=seed,
        )


class PresenceFilter:
    """Bloom filter of flows seen in the current window."""

    def __init__(self, bits: int, hashes: int, seed: int):
        self._hasher = RowHasher(hashes, bits, seed)
        self._bits = np.zeros(bits, dtype=bool)

    def test_and_set(self, key: FlowKey) -> bool:
        """Mark key present; True if it was not already (first in window)."""
        idx = self._hasher.indices(key)
        first = not self._bits[idx].all()
        self._bits[idx] = True
        return first

    def clear(self) -> None:
        self._bits.fill(False)


class PISketch(Detector):
    """Weight-based PS-flow detector with a density query mode.

    The insert path is identical in both modes; mode only changes query().
    """

    def __init__(self, config: PiSketchConfig):
        self.config = config
        self._filter = PresenceFilter(
            config.filter_bits, config.filter_hashes, derive_seed(config.seed, 0)
        )
        self._bucket_seed = derive_seed(config.seed, 1)
        self._cells = config.cells_per_bucket

        shape = (config.buckets, config.cells_per_bucket)
        self._ids = np.zeros(shape, dtype=np.uint64)
        self._weight = np.zeros(shape, dtype=np.int64)
        self._freq = np.zeros(shape, dtype=np.uint32)
        self._pers = np.zeros(shape, dtype=np.uint32)
        self._occupied = np.zeros(shape, dtype=bool)

        self._w_max = (1 << config.weight_bits) - 1
        self._f_max = (1 << config.freq_bits) - 1
        self._p_max = (1 << config.pers_bits) - 1

    @property
    def name(self) -> str:
        return "pisketch" if self.config.mode is PiQueryMode.WEIGHT else "pisketch-density"

    @property
    def memory_bits(self) -> int:
        return self.config.memory_bits

    def new_window(self) -> None:
        self._filter.clear()

    def insert(self, key: FlowKey) -> None:
        first = self._filter.test_and_set(key)
        b = hash64(key, self._bucket_seed) % self.config.buckets
        ids = self._ids[b].tolist()
        occupied = self._occupied[b].tolist()

        empty = -1
        for c in range(self._cells):
            if not occupied[c]:
                if empty < 0:
                    empty = c
            elif ids[c] == key:
                self._update(b, c, first)
                return
        if empty >= 0:
            self._claim(b, empty, key)
            return

        # decrement-on-miss: the lightest cell loses one unit and is taken at zero
        c = int(np.argmin(self._weight[b]))
        self._weight[b, c] -= 1
        if self._weight[b, c] <= 0:
            self._claim(b, c, key)

    def _update(self, b: int, c: int, first: bool) -> None:
        if self._freq[b, c] < self._f_max:
            self._freq[b, c] += 1
        if first:
            self._weight[b, c] = min(int(self._weight[b, c]) + self.config.weight_increment, self._w_max)
            if self._pers[b, c] < self._p_max:
                self._pers[b, c] += 1
            return
        self._weight[b, c] -= 1
        if self._weight[b, c] <= 0:
            self._free(b, c)

    def _claim(self, b: int, c: int, key: FlowKey) -> None:
        self._ids[b, c] = key
        self._weight[b, c] = self.config.weight_increment
        self._freq[b, c] = 1
        self._pers[b, c] = 1
        self._occupied[b, c] = True

    def _free(self, b: int, c: int) -> None:
        self._ids[b, c] = 0
        self._weight[b, c] = 0
        self._freq[b, c] = 0
        self._pers[b, c] = 0
        self._occupied[b, c] = False

    def cells(self) -> list[tuple[FlowKey, int, FlowStats]]:
        """Live cells as (key, weight, stats), in storage order."""
        live = []
        for b, c in zip(*np.nonzero(self._occupied), strict=True):
            live.append(
                (
                    FlowKey(int(self._ids[b, c])),
                    int(self._weight[b, c]),
                    FlowStats(int(self._freq[b, c]), int(self._pers[b, c])),
                )
            )
        return live

    def query(
        self, mode: PiQueryMode | None = None, weight_threshold: int | None = None
    ) -> ReportSet:
        """Report by weight (W >= threshold) or by density (p >= p0, f/p <= d0)."""
        mode = mode or self.config.mode
        criterion = self.config.criterion
        live = self.cells()
        if mode is PiQueryMode.DENSITY:
            stats = {key: s for key, _, s in live if criterion.is_persistent(s)}
            return ReportSet.classify(stats, criterion)

        threshold = self.config.weight_threshold if weight_threshold is None else weight_threshold
        stats = {key: s for key, w, s in live if w >= threshold}
        return ReportSet(stats, frozenset(stats), frozenset())

    def metadata(self) -> dict:
        return {"mode": self.config.mode.value, "weight_threshold": self.config.weight_threshold}


def pisketch_space(cells: int, weight_increment: int, target_f_max: int, target_p_max: int) -> int:
    """Bits PISketch's weight cells need to store the given f/p ranges.

    cells * (L_id + ceil(log2(L) * bits(f_max)) + bits(p_max)), where
    bits(v) is the width needed to hold v.

    Raises:
        ConfigurationError: If weight_increment <= 1 (log2 L would vanish)
    """
    if weight_increment <= 1:
        raise ConfigurationError(f"weight increment L must be > 1, got {weight_increment}")
    f_bits = target_f_max.bit_length()
    p_bits = target_p_max.bit_length()
    return cells * (ID_BITS + math.ceil(math.log2(weight_increment) * f_bits) + p_bits)


def equal_space_p_max(widths: WidthConfig | None = None) -> int:
    """Largest persistence PISketch holds in PSSketch's CL space: 2^L_p - 1."""
    widths = widths or WidthConfig()
    return (1 << widths.p_bits) - 1
