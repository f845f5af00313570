"""Detector interface shared by PSSketch, the baselines and the exact oracle."""

from abc import ABC, abstractmethod
from typing import Any

from flows.types import FlowKey, ReportSet


class Detector(ABC):
    """Abstract base class for streaming PS-flow detectors.

    The caller drives windows: new_window() is called once per window boundary
    crossed, before the first insert of the new window.
    """

    @property
    @abstractmethod
    def name(self) -> str:
        """Detector identifier used in result rows."""
        pass

    @property
    @abstractmethod
    def memory_bits(self) -> int:
        """Accounted size of the detector state."""
        pass

    @abstractmethod
    def new_window(self) -> None:
        """Start the next time window."""
        raise NotImplementedError

    @abstractmethod
    def insert(self, key: FlowKey) -> Any:
        """Process one packet of flow key."""
        raise NotImplementedError

    @abstractmethod
    def query(self) -> ReportSet:
        """Report flows with their estimated statistics."""
        raise NotImplementedError

    def metadata(self) -> dict[str, Any]:
        """Detector-specific notes carried into result rows."""
        return {}
