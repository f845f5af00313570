"""Exact-counting oracle behind the detector interface."""

from flows.types import Criterion, FlowKey, FlowStats, ReportSet
from sketch.base import Detector

# id + frequency + persistence + last-seen window per flow
_BITS_PER_FLOW = 64 + 32 + 32 + 32


class ExactDetector(Detector):
    """Counts every flow exactly; reports all flows, classified by the criterion."""

    def __init__(self, criterion: Criterion):
        self.criterion = criterion
        self._window = 0
        self._frequency: dict[FlowKey, int] = {}
        self._persistence: dict[FlowKey, int] = {}
        self._last_window: dict[FlowKey, int] = {}

    @property
    def name(self) -> str:
        return "exact"

    @property
    def memory_bits(self) -> int:
        return len(self._frequency) * _BITS_PER_FLOW

    def new_window(self) -> None:
        self._window += 1

    def insert(self, key: FlowKey) -> None:
        self._frequency[key] = self._frequency.get(key, 0) + 1
        if self._last_window.get(key) != self._window:
            self._last_window[key] = self._window
            self._persistence[key] = self._persistence.get(key, 0) + 1

    def query(self) -> ReportSet:
        stats = {key: FlowStats(f, self._persistence[key]) for key, f in self._frequency.items()}
        return ReportSet.classify(stats, self.criterion)
