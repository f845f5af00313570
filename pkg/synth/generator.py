"""Synthetic traces under the independent-Poisson flow model.

Every flow is active over a range of windows and emits a Poisson(lambda)
number of packets in each of them, independently of every other flow.
Background and transient flows draw lambda from a normal distribution
truncated below at LAMBDA_FLOOR (draws under the floor are redrawn); planted
PS flows use fixed rates.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from flows.errors import InvalidParameterError
from flows.hashing import MASK64, derive_seed, splitmix64
from flows.types import FlowKey, PacketRecord, WindowedTrace

logger = logging.getLogger(__name__)

LAMBDA_FLOOR = 1e-3

# derive_seed stream indices
_LAMBDA_STREAM = 0
_COUNT_STREAM = 1
_KEY_STREAM = 2
_SHUFFLE_STREAM = 3


class FlowRole(str, Enum):
    BACKGROUND = "background"
    PLANTED = "planted"
    TRANSIENT = "transient"


@dataclass(frozen=True)
class FlowModel:
    """One flow's Poisson rate per window and its number of windows."""

    lam: float
    windows: int

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidParameterError(f"lambda must be > 0, got {self.lam}")
        if self.windows < 1:
            raise InvalidParameterError(f"windows must be >= 1, got {self.windows}")

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Independent per-window packet counts."""
        return rng.poisson(self.lam, self.windows)


@dataclass(frozen=True)
class PopulationModel:
    """A flow population.

    Attributes:
        flow_count: Background flows active in every window
        lambda_mean: Mean of the normal lambda distribution
        lambda_stddev: Standard deviation of that distribution
        planted_ps: (lambda, count) pairs of fixed-rate planted flows
        transient_count: Flows active only for transient_span consecutive windows
        transient_span: Active length of a transient flow
    """

    flow_count: int = 0
    lambda_mean: float = 2.0
    lambda_stddev: float = 0.5
    planted_ps: tuple[tuple[float, int], ...] = ()
    transient_count: int = 0
    transient_span: int = 10

    def __post_init__(self):
        if not self.lambda_mean >= LAMBDA_FLOOR:
            raise InvalidParameterError(f"lambda_mean must be > 0, got {self.lambda_mean}")
        if self.lambda_stddev < 0:
            raise InvalidParameterError(f"lambda_stddev must be >= 0, got {self.lambda_stddev}")
        if self.flow_count < 0 or self.transient_count < 0:
            raise InvalidParameterError("flow counts must be >= 0")
        if self.transient_span < 1:
            raise InvalidParameterError(f"transient_span must be >= 1, got {self.transient_span}")
        for lam, count in self.planted_ps:
            if not lam > 0:
                raise InvalidParameterError(f"planted lambda must be > 0, got {lam}")
            if count < 0:
                raise InvalidParameterError(f"planted count must be >= 0, got {count}")

    @property
    def total_flows(self) -> int:
        return self.flow_count + self.transient_count + sum(c for _, c in self.planted_ps)

    def to_dict(self) -> dict[str, Any]:
        return {
            "flow_count": self.flow_count,
            "lambda_mean": self.lambda_mean,
            "lambda_stddev": self.lambda_stddev,
            "planted_ps": [list(p) for p in self.planted_ps],
            "transient_count": self.transient_count,
            "transient_span": self.transient_span,
        }


@dataclass(frozen=True)
class SyntheticFlow:
    key: FlowKey
    lam: float
    role: FlowRole
    start: int
    span: int

    @property
    def model(self) -> FlowModel:
        return FlowModel(self.lam, self.span)


@dataclass(frozen=True)
class SyntheticTrace:
    """A generated trace plus the per-flow ground truth of how it was made."""

    trace: WindowedTrace
    flows: tuple[SyntheticFlow, ...] = field(default=())
    windows: int = 0
    seed: int = 0

    @property
    def planted_keys(self) -> list[FlowKey]:
        return [f.key for f in self.flows if f.role is FlowRole.PLANTED]

    def truth_dict(self, model: PopulationModel | None = None) -> dict[str, Any]:
        """JSON-ready sidecar describing every generated flow."""
        return {
            "seed": self.seed,
            "windows": self.windows,
            "packets": len(self.trace),
            "model": model.to_dict() if model else None,
            "planted_ps": [str(k) for k in self.planted_keys],
            "flows": [
                {
                    "key": str(f.key),
                    "lambda": f.lam,
                    "role": f.role.value,
                    "start": f.start,
                    "span": f.span,
                }
                for f in self.flows
            ],
        }


def draw_lambdas(rng: np.random.Generator, mean: float, stddev: float, count: int) -> np.ndarray:
    """Normal(mean, stddev) rates, redrawing any below LAMBDA_FLOOR."""
    values = rng.normal(mean, stddev, count)
    bad = values < LAMBDA_FLOOR
    while bad.any():
        values[bad] = rng.normal(mean, stddev, int(bad.sum()))
        bad = values < LAMBDA_FLOOR
    return values


def flow_keys(seed: int, count: int) -> list[FlowKey]:
    """count distinct 64-bit keys (splitmix64 is a bijection)."""
    base = derive_seed(seed, _KEY_STREAM)
    return [FlowKey(splitmix64((base + i) & MASK64)) for i in range(count)]


def synthesize(model: PopulationModel, windows: int, seed: int) -> SyntheticTrace:
    """Generate a trace and its flow table.

    Args:
        model: Population description
        windows: Number of windows (i)
        seed: Master seed; output is a pure function of (model, windows, seed)

    Returns:
        SyntheticTrace with records in window order, shuffled within windows
    """
    if windows < 1:
        raise InvalidParameterError(f"windows must be >= 1, got {windows}")

    lambda_rng = np.random.default_rng(derive_seed(seed, _LAMBDA_STREAM))
    count_rng = np.random.default_rng(derive_seed(seed, _COUNT_STREAM))
    shuffle_rng = np.random.default_rng(derive_seed(seed, _SHUFFLE_STREAM))

    keys = flow_keys(seed, model.total_flows)
    flows: list[SyntheticFlow] = []

    for lam in draw_lambdas(lambda_rng, model.lambda_mean, model.lambda_stddev, model.flow_count):
        flows.append(SyntheticFlow(keys[len(flows)], float(lam), FlowRole.BACKGROUND, 0, windows))
    for lam, count in model.planted_ps:
        for _ in range(count):
            flows.append(SyntheticFlow(keys[len(flows)], float(lam), FlowRole.PLANTED, 0, windows))

    span = min(model.transient_span, windows)
    transient_lambdas = draw_lambdas(
        lambda_rng, model.lambda_mean, model.lambda_stddev, model.transient_count
    )
    starts = lambda_rng.integers(0, windows - span + 1, size=model.transient_count)
    for lam, start in zip(transient_lambdas, starts, strict=True):
        flows.append(
            SyntheticFlow(keys[len(flows)], float(lam), FlowRole.TRANSIENT, int(start), span)
        )

    counts = np.zeros((len(flows), windows), dtype=np.int64)
    for row, flow in enumerate(flows):
        counts[row, flow.start : flow.start + flow.span] = flow.model.sample(count_rng)

    key_array = np.array([f.key for f in flows], dtype=np.uint64)
    records: list[PacketRecord] = []
    for window in range(windows):
        column = counts[:, window]
        if not column.any():
            continue
        window_keys = np.repeat(key_array, column)
        shuffle_rng.shuffle(window_keys)
        records.extend(PacketRecord(FlowKey(k), window) for k in window_keys.tolist())

    logger.info(
        f"Synthesized {len(records)} packets from {len(flows)} flows over {windows} windows"
    )
    return SyntheticTrace(WindowedTrace(tuple(records)), tuple(flows), windows, seed)


def generate_trace(model: PopulationModel, windows: int, seed: int) -> WindowedTrace:
    """Generate only the trace; see synthesize()."""
    return synthesize(model, windows, seed).trace
