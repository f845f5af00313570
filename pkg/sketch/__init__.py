"""PSSketch core: Competition Layer, Protection Layer and space accounting."""

from .base import Detector
from .dump import dump_state, write_dump
from .hashing import Fingerprinter, sketch_seeds
from .pssketch import PSSketch
from .space import max_storable, memory_bits, size_for_budget
from .types import (
    CompetitionEntry,
    InsertOutcome,
    Overflow,
    ProtectionEntry,
    ReportOutcome,
    ScanResult,
    SketchConfig,
    WidthConfig,
)

__all__ = [
    "CompetitionEntry",
    "Detector",
    "Fingerprinter",
    "InsertOutcome",
    "Overflow",
    "PSSketch",
    "ProtectionEntry",
    "ReportOutcome",
    "ScanResult",
    "SketchConfig",
    "WidthConfig",
    "dump_state",
    "max_storable",
    "memory_bits",
    "size_for_budget",
    "sketch_seeds",
    "write_dump",
]
