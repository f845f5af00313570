"""Reference detectors: CMSketch, On-off sketch, Strawman, PISketch and the exact oracle."""

from .cmsketch import CmSketchConfig, CountMinSketch
from .exact import ExactDetector
from .onoff import OnOffSketch, OoSketchConfig
from .pisketch import (
    PiQueryMode,
    PISketch,
    PiSketchConfig,
    default_weight_threshold,
    equal_space_p_max,
    pisketch_space,
)
from .strawman import Strawman, StrawmanConfig

__all__ = [
    "CmSketchConfig",
    "CountMinSketch",
    "ExactDetector",
    "OnOffSketch",
    "OoSketchConfig",
    "PISketch",
    "PiQueryMode",
    "PiSketchConfig",
    "Strawman",
    "StrawmanConfig",
    "default_weight_threshold",
    "equal_space_p_max",
    "pisketch_space",
]
