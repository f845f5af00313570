"""Configuration management for psflow."""

import json
import os
from typing import Any

import yaml

# Define path constants directly to avoid circular imports with utils
# (utils.logger reads Config.LOG_LEVEL)
_RUNTIME_DIR = os.path.join(os.path.expanduser("~"), ".psflow")
_CONFIG_FILE = os.path.join(_RUNTIME_DIR, "config")

# Default configuration template
_DEFAULT_CONFIG = """\
# psflow Configuration
#
# Defaults for the benchmark CLI. Every key can be overridden per run with a flag
# or with --config <file.json|file.yaml>.

P0=50
D0=1.2
BUCKET_WIDTH=32
MEMORY_KB=100

# Competition Layer / Protection Layer counter widths (bits)
# FP_BITS=16
# F_BITS=8
# P_BITS=6
# FOF_BITS=8
# POF_BITS=8

# SEED=1
# JOBS=1
# LOG_LEVEL=INFO
"""


def _load_config(path: str) -> dict[str, str]:
    """Parse a KEY=VALUE config file, skipping comments and blank lines."""
    cfg: dict[str, str] = {}
    if not os.path.isfile(path):
        return cfg
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                continue
            key, _, value = line.partition("=")
            # Strip inline comments (# ...) from the value
            if "#" in value:
                value = value[: value.index("#")]
            cfg[key.strip()] = value.strip()
    return cfg


def _ensure_config():
    """Ensure ~/.psflow/config exists, create with defaults if not."""
    if os.path.exists(_CONFIG_FILE):
        return
    try:
        os.makedirs(_RUNTIME_DIR, exist_ok=True)
        with open(_CONFIG_FILE, "w", encoding="utf-8") as f:
            f.write(_DEFAULT_CONFIG)
    except OSError:
        # Read-only home directories still get the built-in defaults
        pass


# Ensure config exists and load it
_ensure_config()
_cfg = _load_config(_CONFIG_FILE)


def load_overrides(path: str) -> dict[str, Any]:
    """Load a --config override file.

    The file is a JSON object, or YAML when the name ends in .yaml/.yml. Keys
    are option names as on the command line (``memory-kb`` or ``memory_kb``).

    Args:
        path: Override file path

    Returns:
        Mapping of normalized option name to value

    Raises:
        OSError: If the file cannot be read
        ValueError: If the content is not a mapping or fails to parse
    """
    with open(path, encoding="utf-8") as f:
        text = f.read()
    if path.endswith((".yaml", ".yml")):
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ValueError(f"invalid YAML in {path}: {e}") from e
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError(f"{path} must contain a mapping of option names to values")
    return {str(key).replace("-", "_").lower(): value for key, value in data.items()}


class Config:
    """Configuration for the benchmark harness.

    All configuration is centralized here. Access config values directly via Config.XXX.
    """

    # PS criterion
    P0 = int(_cfg.get("P0", "50"))
    D0 = float(_cfg.get("D0", "1.2"))

    # PSSketch layout
    BUCKET_WIDTH = int(_cfg.get("BUCKET_WIDTH", "32"))
    FP_BITS = int(_cfg.get("FP_BITS", "16"))
    F_BITS = int(_cfg.get("F_BITS", "8"))
    P_BITS = int(_cfg.get("P_BITS", "6"))
    FOF_BITS = int(_cfg.get("FOF_BITS", "8"))
    POF_BITS = int(_cfg.get("POF_BITS", "8"))
    PL_FRACTION = float(_cfg.get("PL_FRACTION", "0.25"))
    OVERFLOW_AT_P0 = _cfg.get("OVERFLOW_AT_P0", "true").lower() == "true"

    # PISketch
    PI_WEIGHT_INCREMENT = int(_cfg.get("PI_WEIGHT_INCREMENT", "8"))
    PI_CELLS_PER_BUCKET = int(_cfg.get("PI_CELLS_PER_BUCKET", "8"))
    PI_FILTER_FRACTION = float(_cfg.get("PI_FILTER_FRACTION", "0.25"))
    PI_FILTER_HASHES = int(_cfg.get("PI_FILTER_HASHES", "2"))

    # Strawman (CMSketch : On-off Sketch : candidate array)
    STRAWMAN_SPLIT = _cfg.get("STRAWMAN_SPLIT", "2:1:1")
    CMS_ROWS = int(_cfg.get("CMS_ROWS", "3"))
    OOS_ROWS = int(_cfg.get("OOS_ROWS", "3"))

    # Harness
    MEMORY_KB = float(_cfg.get("MEMORY_KB", "100"))
    SEED = int(_cfg.get("SEED", "1"))
    THROUGHPUT_REPEATS = int(_cfg.get("THROUGHPUT_REPEATS", "3"))
    JOBS = int(_cfg.get("JOBS", "1"))

    # Logging Configuration
    # Note: Logging is controlled via --verbose flag
    # LOG_DIR is ~/.psflow/logs/ (see utils.runtime)
    LOG_LEVEL = _cfg.get("LOG_LEVEL", "INFO").upper()

    @classmethod
    def strawman_split(cls) -> tuple[int, int, int]:
        """Parse STRAWMAN_SPLIT ("a:b:c") into integer weights."""
        parts = [int(p) for p in cls.STRAWMAN_SPLIT.split(":")]
        if len(parts) != 3 or any(p <= 0 for p in parts):
            raise ValueError(
                f"STRAWMAN_SPLIT must be three positive weights, got {cls.STRAWMAN_SPLIT}"
            )
        return parts[0], parts[1], parts[2]

    @classmethod
    def validate(cls):
        """Validate configuration.

        Raises:
            ValueError: If a value is out of range
        """
        if cls.P0 < 1:
            raise ValueError(f"P0 must be >= 1, got {cls.P0}")
        if cls.D0 < 1:
            raise ValueError(f"D0 must be >= 1, got {cls.D0}")
        if cls.BUCKET_WIDTH < 1:
            raise ValueError(f"BUCKET_WIDTH must be >= 1, got {cls.BUCKET_WIDTH}")
        if not 0 < cls.PL_FRACTION < 1:
            raise ValueError(f"PL_FRACTION must be in (0, 1), got {cls.PL_FRACTION}")
        if not 0 < cls.PI_FILTER_FRACTION < 1:
            raise ValueError(f"PI_FILTER_FRACTION must be in (0, 1), got {cls.PI_FILTER_FRACTION}")
        if cls.JOBS < 1:
            raise ValueError(f"JOBS must be >= 1, got {cls.JOBS}")
        cls.strawman_split()
