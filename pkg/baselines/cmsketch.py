"""Count-Min sketch frequency estimator."""

from dataclasses import dataclass

import numpy as np

from flows.errors import ConfigurationError
from flows.types import FlowKey

from .base import RowHasher


@dataclass(frozen=True)
class CmSketchConfig:
    rows: int = 3
    cols: int = 1024
    counter_width: int = 32

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError(f"CMSketch needs rows, cols >= 1, got {self.rows}x{self.cols}")
        if not 1 <= self.counter_width <= 32:
            raise ConfigurationError(f"counter_width must be in [1, 32], got {self.counter_width}")

    @property
    def memory_bits(self) -> int:
        return self.rows * self.cols * self.counter_width


class CountMinSketch:
    """rows x cols counters; the estimate is the minimum over rows.

    Counters clamp at 2^counter_width - 1 instead of wrapping, so estimates
    never fall below the true count.
    """

    def __init__(self, config: CmSketchConfig, seed: int = 0):
        self.config = config
        self._hasher = RowHasher(config.rows, config.cols, seed)
        self._rows = np.arange(config.rows)
        self._counters = np.zeros((config.rows, config.cols), dtype=np.uint32)
        self._max = (1 << config.counter_width) - 1

    @property
    def memory_bits(self) -> int:
        return self.config.memory_bits

    def insert(self, key: FlowKey) -> None:
        cols = self._hasher.indices(key)
        for row, col in enumerate(cols):
            if self._counters[row, col] < self._max:
                self._counters[row, col] += 1

    def estimate(self, key: FlowKey) -> int:
        return int(self._counters[self._rows, self._hasher.indices(key)].min())
