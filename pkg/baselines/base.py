"""Shared pieces of the baseline detectors."""

from flows.hashing import derive_seed, hash64
from flows.types import FlowKey


class RowHasher:
    """Independent seeded hashes, one per row, mapped into [0, cols).

    Row i uses derive_seed(master_seed, i).
    """

    def __init__(self, rows: int, cols: int, master_seed: int):
        self.rows = rows
        self.cols = cols
        self.seeds = [derive_seed(master_seed, i) for i in range(rows)]

    def indices(self, key: FlowKey) -> list[int]:
        return [hash64(key, seed) % self.cols for seed in self.seeds]
