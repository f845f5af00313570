"""Exact persistence and density histograms of a trace."""

from dataclasses import dataclass

from flows.model import exact_stats
from flows.types import WindowedTrace

# Density bins are 0.1 wide from 1.0; everything from DENSITY_CAP up shares the last bin
DENSITY_CAP = 5


@dataclass(frozen=True)
class Bin:
    """Half-open histogram bin [low, high); high is None for an open top bin."""

    low: float
    high: float | None
    count: int


@dataclass(frozen=True)
class DistributionReport:
    flows: int
    persistence: list[Bin]
    density: list[Bin]

    @property
    def density_flows(self) -> int:
        return sum(b.count for b in self.density)


def distribution_report(trace: WindowedTrace) -> DistributionReport:
    """Histogram every flow's persistence and, for flows with p >= 2, its density.

    Persistence bins are powers of two: [1, 2), [2, 4), [4, 8), ...
    """
    stats = exact_stats(trace)

    top = max((s.persistence for s in stats.values()), default=0).bit_length()
    persistence_counts = [0] * top
    last_density = (DENSITY_CAP - 1) * 10
    density_counts = [0] * (last_density + 1)

    for s in stats.values():
        persistence_counts[s.persistence.bit_length() - 1] += 1
        if s.persistence >= 2:
            # floor(10 * (d - 1)) computed on integers
            index = (10 * (s.frequency - s.persistence)) // s.persistence
            density_counts[min(index, last_density)] += 1

    persistence = [Bin(1 << k, 1 << (k + 1), c) for k, c in enumerate(persistence_counts)]
    density = [
        Bin(round(1 + i / 10, 1), round(1 + (i + 1) / 10, 1) if i < last_density else None, c)
        for i, c in enumerate(density_counts)
    ]
    return DistributionReport(len(stats), persistence, density)
