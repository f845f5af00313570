"""Shared fixtures for psflow tests."""

import os

import pytest

from flows.types import Criterion, WindowedTrace
from sketch.pssketch import PSSketch
from sketch.types import SketchConfig, WidthConfig


def pytest_collection_modifyitems(config, items):  # noqa: ARG001
    if os.environ.get("RUN_SLOW_TESTS") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set RUN_SLOW_TESTS=1 to run full-scale checks")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


class FixedRandom:
    """Contention source that always draws the same uniform value."""

    def __init__(self, value: float):
        self.value = value
        self.draws = 0

    def random(self) -> float:
        self.draws += 1
        return self.value


class NoDrawRandom:
    """Contention source that fails the test if it is ever consulted."""

    def random(self) -> float:
        raise AssertionError("contention drew a random number")


@pytest.fixture
def make_sketch():
    """Factory for small sketches whose fingerprint is the flow key itself.

    Usage:
        def test_something(make_sketch):
            sketch = make_sketch(x=1, y=4, threshold=50)
    """

    def _make(
        x: int = 1,
        y: int = 4,
        r: int = 8,
        threshold: int | None = 50,
        rng=None,
        criterion: Criterion | None = None,
        **widths,
    ) -> PSSketch:
        config = SketchConfig(
            x=x,
            y=y,
            r=r,
            widths=WidthConfig(p_overflow_threshold=threshold, **widths),
            criterion=criterion or Criterion(50, 1.2),
        )
        return PSSketch(config, fingerprint=lambda key: key, rng=rng)

    return _make


@pytest.fixture
def small_trace() -> WindowedTrace:
    """Three windows: flow 1 every window, flow 2 dense in window 0, flow 3 once."""
    return WindowedTrace.from_pairs(
        [(1, 0), (2, 0), (2, 0), (2, 0), (1, 1), (3, 1), (1, 2), (1, 2)]
    )


@pytest.fixture
def feed_windows():
    """Insert per-window key lists, opening a new window between lists."""

    def _feed(sketch, windows):
        outcomes = []
        for index, keys in enumerate(windows):
            if index:
                sketch.new_window()
            outcomes.extend(sketch.insert(key) for key in keys)
        return outcomes

    return _feed


@pytest.fixture
def fixed_random():
    """Factory for contention sources that always draw the given uniform."""
    return FixedRandom


@pytest.fixture
def no_draw_random() -> NoDrawRandom:
    return NoDrawRandom()
