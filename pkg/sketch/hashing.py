"""Fingerprints for the Competition Layer."""

from collections.abc import Callable

from flows.hashing import derive_seed, hash64
from flows.types import FlowKey

# Indices passed to derive_seed for the two PSSketch streams
HASH_STREAM = 0
RNG_STREAM = 1


class Fingerprinter:
    """Maps a flow key to a non-zero L_fp-bit fingerprint.

    Zero marks an empty slot, so a zero hash is remapped to 1. The bucket is
    fingerprint mod X.
    """

    def __init__(self, fp_bits: int, seed: int, raw_hash: Callable[[int], int] | None = None):
        self.mask = (1 << fp_bits) - 1
        self.seed = seed
        self._raw_hash = raw_hash or (lambda key: hash64(key, seed))

    def __call__(self, key: FlowKey) -> int:
        fp = self._raw_hash(key) & self.mask
        return fp if fp else 1


def sketch_seeds(master: int) -> tuple[int, int]:
    """(hash_seed, rng_seed) derived from a master seed."""
    return derive_seed(master, HASH_STREAM), derive_seed(master, RNG_STREAM)
