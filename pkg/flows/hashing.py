"""Seeded 64-bit hashing and seed derivation.

All randomness in psflow comes from one master seed. Component seeds are
derived with splitmix64 counter mixing::

    derive_seed(master, index) = splitmix64(master + (index + 1) * GOLDEN)

so each component (sketch hash, contention PRNG, baseline rows, generator
streams) owns an independent, replayable stream.
"""

import struct

import mmh3

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_U64 = struct.Struct("<Q")


def splitmix64(value: int) -> int:
    """One splitmix64 finalization step on a 64-bit value."""
    z = (value + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Derive the index-th component seed from a master seed."""
    return splitmix64((master + (index + 1) * GOLDEN) & MASK64)


def hash64(key: int, seed: int) -> int:
    """Hash a 64-bit key to an unsigned 64-bit value under a seed.

    Args:
        key: Flow key (0 <= key < 2^64)
        seed: Any integer seed; folded to the 32 bits mmh3 accepts

    Returns:
        Unsigned 64-bit hash
    """
    folded = (seed ^ (seed >> 32)) & 0xFFFFFFFF
    return mmh3.hash64(_U64.pack(key & MASK64), folded, signed=False)[0]


def hash_identity(text: str, seed: int = 0) -> int:
    """Hash a textual flow identity (e.g. a 5-tuple) to 64 bits."""
    return mmh3.hash64(text.encode("utf-8"), seed & 0xFFFFFFFF, signed=False)[0]
