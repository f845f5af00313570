"""Strawman detector: CMSketch + On-off sketch + a candidate array."""

import logging
from dataclasses import dataclass, field

from flows.errors import ConfigurationError
from flows.hashing import derive_seed
from flows.types import Criterion, FlowKey, FlowStats, ReportSet
from sketch.base import Detector

from .cmsketch import CmSketchConfig, CountMinSketch
from .onoff import OnOffSketch, OoSketchConfig

logger = logging.getLogger(__name__)

CANDIDATE_ID_BITS = 64


@dataclass(frozen=True)
class StrawmanConfig:
    cms: CmSketchConfig
    oos: OoSketchConfig
    capacity: int
    criterion: Criterion = field(default_factory=lambda: Criterion(50, 1.2))
    seed: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ConfigurationError(f"candidate capacity must be >= 1, got {self.capacity}")

    @property
    def memory_bits(self) -> int:
        return self.cms.memory_bits + self.oos.memory_bits + self.capacity * CANDIDATE_ID_BITS

    @classmethod
    def for_budget(
        cls,
        memory_bits: int,
        criterion: Criterion,
        split: tuple[int, int, int] = (2, 1, 1),
        cms_rows: int = 3,
        oos_rows: int = 3,
        seed: int = 0,
    ) -> "StrawmanConfig":
        """Divide a bit budget CMS : OOS : candidates by split."""
        total = sum(split)
        cms_bits = memory_bits * split[0] // total
        oos_bits = memory_bits * split[1] // total
        array_bits = memory_bits - cms_bits - oos_bits

        cms = CmSketchConfig(rows=cms_rows, cols=max(1, cms_bits // (cms_rows * 32)))
        oos = OoSketchConfig(rows=oos_rows, cols=max(1, oos_bits // (oos_rows * 17)))
        capacity = max(1, array_bits // CANDIDATE_ID_BITS)
        return cls(cms, oos, capacity, criterion, seed)


class Strawman(Detector):
    """Estimates f with CMSketch and p with an On-off sketch.

    A flow becomes a candidate the first time its persistence estimate reaches
    p0; arrivals after the array is full are dropped and counted.
    """

    def __init__(self, config: StrawmanConfig):
        self.config = config
        self.cms = CountMinSketch(config.cms, derive_seed(config.seed, 0))
        self.oos = OnOffSketch(config.oos, derive_seed(config.seed, 1))
        self.candidates: dict[FlowKey, None] = {}
        self.candidate_overflow = 0

    @property
    def name(self) -> str:
        return "strawman"

    @property
    def memory_bits(self) -> int:
        return self.config.memory_bits

    def new_window(self) -> None:
        self.oos.new_window()

    def insert(self, key: FlowKey) -> None:
        self.cms.insert(key)
        self.oos.insert(key)
        if key in self.candidates:
            return
        if self.oos.estimate(key) < self.config.criterion.p0:
            return
        if len(self.candidates) < self.config.capacity:
            self.candidates[key] = None
            return
        if self.candidate_overflow == 0:
            logger.debug(f"Strawman candidate array full at {self.config.capacity} entries")
        self.candidate_overflow += 1

    def query(self) -> ReportSet:
        stats = {}
        for key in self.candidates:
            f = self.cms.estimate(key)
            # true p <= true f <= CMS estimate, so cap p by it
            p = min(self.oos.estimate(key), f)
            stats[key] = FlowStats(f, p)
        return ReportSet.classify(stats, self.config.criterion)

    def metadata(self) -> dict:
        return {
            "candidates": len(self.candidates),
            "candidate_capacity": self.config.capacity,
            "candidate_overflow": self.candidate_overflow,
        }
