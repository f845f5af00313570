"""On-off sketch persistence estimator."""

from dataclasses import dataclass

import numpy as np

from flows.errors import ConfigurationError
from flows.types import FlowKey

from .base import RowHasher


@dataclass(frozen=True)
class OoSketchConfig:
    rows: int = 3
    cols: int = 1024
    counter_width: int = 16

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError(
                f"On-off sketch needs rows, cols >= 1, got {self.rows}x{self.cols}"
            )
        if not 1 <= self.counter_width <= 32:
            raise ConfigurationError(f"counter_width must be in [1, 32], got {self.counter_width}")

    @property
    def memory_bits(self) -> int:
        # one on/off bit per counter
        return self.rows * self.cols * (self.counter_width + 1)


class OnOffSketch:
    """Count-Min layout where each counter moves at most once per window.

    A counter's on/off bit is set by its first increment in a window and
    cleared by new_window().
    """

    def __init__(self, config: OoSketchConfig, seed: int = 0):
        self.config = config
        self._hasher = RowHasher(config.rows, config.cols, seed)
        self._rows = np.arange(config.rows)
        self._counters = np.zeros((config.rows, config.cols), dtype=np.uint32)
        self._on = np.zeros((config.rows, config.cols), dtype=bool)
        self._max = (1 << config.counter_width) - 1

    @property
    def memory_bits(self) -> int:
        return self.config.memory_bits

    def new_window(self) -> None:
        self._on.fill(False)

    def insert(self, key: FlowKey) -> None:
        for row, col in enumerate(self._hasher.indices(key)):
            if self._on[row, col]:
                continue
            self._on[row, col] = True
            if self._counters[row, col] < self._max:
                self._counters[row, col] += 1

    def estimate(self, key: FlowKey) -> int:
        return int(self._counters[self._rows, self._hasher.indices(key)].min())
