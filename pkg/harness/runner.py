"""Experiment configuration, detector construction and single runs."""

import hashlib
import json
import statistics
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass, field, replace
from typing import Any

from baselines.exact import ExactDetector
from baselines.pisketch import PiQueryMode, PISketch, PiSketchConfig
from baselines.strawman import Strawman, StrawmanConfig
from config import Config
from flows.errors import ConfigurationError, InvalidParameterError
from flows.types import Criterion, FlowKey, ReportSet, WindowedTrace
from sketch.base import Detector
from sketch.hashing import sketch_seeds
from sketch.pssketch import PSSketch
from sketch.space import size_for_budget
from sketch.types import SketchConfig, WidthConfig
from utils import get_logger

from .metrics import GroundTruth, MetricsRecord, f1_score, score

logger = get_logger(__name__)

DETECTORS = ("pssketch", "strawman", "pisketch", "pisketch-density", "exact")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to build and run one detector on one trace."""

    detector: str = "pssketch"
    memory_kb: float = field(default_factory=lambda: Config.MEMORY_KB)
    p0: int = field(default_factory=lambda: Config.P0)
    d0: float = field(default_factory=lambda: Config.D0)
    bucket_width: int = field(default_factory=lambda: Config.BUCKET_WIDTH)
    fp_bits: int = field(default_factory=lambda: Config.FP_BITS)
    f_bits: int = field(default_factory=lambda: Config.F_BITS)
    p_bits: int = field(default_factory=lambda: Config.P_BITS)
    fof_bits: int = field(default_factory=lambda: Config.FOF_BITS)
    pof_bits: int = field(default_factory=lambda: Config.POF_BITS)
    p_overflow: int | None = None
    overflow_at_p0: bool = field(default_factory=lambda: Config.OVERFLOW_AT_P0)
    pl_fraction: float = field(default_factory=lambda: Config.PL_FRACTION)
    prune: bool = True
    burst_elimination: bool = True
    vectorized_scan: bool = False
    pi_weight_increment: int = field(default_factory=lambda: Config.PI_WEIGHT_INCREMENT)
    pi_cells_per_bucket: int = field(default_factory=lambda: Config.PI_CELLS_PER_BUCKET)
    pi_filter_fraction: float = field(default_factory=lambda: Config.PI_FILTER_FRACTION)
    pi_filter_hashes: int = field(default_factory=lambda: Config.PI_FILTER_HASHES)
    pi_weight_threshold: int | None = None
    strawman_split: tuple[int, int, int] = field(default_factory=Config.strawman_split)
    cms_rows: int = field(default_factory=lambda: Config.CMS_ROWS)
    oos_rows: int = field(default_factory=lambda: Config.OOS_ROWS)
    seed: int = field(default_factory=lambda: Config.SEED)
    repeats: int = field(default_factory=lambda: Config.THROUGHPUT_REPEATS)
    measure_throughput: bool = True

    def __post_init__(self):
        if self.detector not in DETECTORS:
            raise ConfigurationError(
                f"unknown detector {self.detector!r}; choose from {', '.join(DETECTORS)}"
            )
        if not self.memory_kb > 0:
            raise ConfigurationError(f"memory budget must be > 0 KB, got {self.memory_kb}")
        if self.bucket_width < 1:
            raise ConfigurationError(f"bucket width must be >= 1, got {self.bucket_width}")
        if not 0 < self.pl_fraction < 1:
            raise ConfigurationError(f"pl_fraction must be in (0, 1), got {self.pl_fraction}")
        if self.repeats < 1:
            raise ConfigurationError(f"repeat count must be >= 1, got {self.repeats}")
        Criterion(self.p0, self.d0)

    @property
    def criterion(self) -> Criterion:
        return Criterion(self.p0, self.d0)

    @property
    def memory_bits(self) -> int:
        return int(self.memory_kb * 1024 * 8)

    def with_(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        values = asdict(self)
        values["strawman_split"] = list(self.strawman_split)
        return values

    def digest(self) -> str:
        """Short stable hash of every field except the throughput knobs."""
        values = self.to_dict()
        values.pop("repeats")
        values.pop("measure_throughput")
        encoded = json.dumps(values, sort_keys=True).encode("utf-8")
        return hashlib.sha256(encoded).hexdigest()[:12]

    def widths(self) -> WidthConfig:
        """Counter widths with the persistence overflow value resolved.

        An explicit p_overflow wins; otherwise overflow_at_p0 uses p0 when it
        fits in p_bits, and everything else falls back to 2^p_bits.
        """
        threshold = self.p_overflow
        if threshold is None and self.overflow_at_p0 and 2 <= self.p0 <= (1 << self.p_bits):
            threshold = self.p0
        return WidthConfig(
            fp_bits=self.fp_bits,
            f_bits=self.f_bits,
            p_bits=self.p_bits,
            fof_bits=self.fof_bits,
            pof_bits=self.pof_bits,
            p_overflow_threshold=threshold,
        )

    def sketch_config(self) -> SketchConfig:
        """PSSketch sizing for this memory budget."""
        widths = self.widths()
        x, r = size_for_budget(self.memory_bits, self.bucket_width, widths, self.pl_fraction)
        hash_seed, rng_seed = sketch_seeds(self.seed)
        return SketchConfig(
            x=x,
            y=self.bucket_width,
            r=r,
            widths=widths,
            criterion=self.criterion,
            hash_seed=hash_seed,
            rng_seed=rng_seed,
            burst_elimination=self.burst_elimination,
            prune=self.prune,
            vectorized_scan=self.vectorized_scan,
        )


def build_detector(config: ExperimentConfig) -> Detector:
    """Instantiate the configured detector within its memory budget."""
    criterion = config.criterion
    if config.detector == "pssketch":
        return PSSketch(config.sketch_config())
    if config.detector == "strawman":
        return Strawman(
            StrawmanConfig.for_budget(
                config.memory_bits,
                criterion,
                split=config.strawman_split,
                cms_rows=config.cms_rows,
                oos_rows=config.oos_rows,
                seed=config.seed,
            )
        )
    if config.detector in ("pisketch", "pisketch-density"):
        mode = PiQueryMode.WEIGHT if config.detector == "pisketch" else PiQueryMode.DENSITY
        return PISketch(
            PiSketchConfig.for_budget(
                config.memory_bits,
                criterion,
                mode=mode,
                weight_increment=config.pi_weight_increment,
                cells_per_bucket=config.pi_cells_per_bucket,
                filter_fraction=config.pi_filter_fraction,
                filter_hashes=config.pi_filter_hashes,
                weight_threshold=config.pi_weight_threshold,
                seed=config.seed,
            )
        )
    return ExactDetector(criterion)


def feed(detector: Detector, trace: WindowedTrace) -> None:
    """Insert every record, calling new_window() for each window boundary crossed."""
    current = 0
    for record in trace.records:
        while current < record.window:
            detector.new_window()
            current += 1
        detector.insert(record.flow)


def measure_throughput(
    factory: Callable[[], Detector], trace: WindowedTrace, repeats: int = 3
) -> float:
    """Median packets per second of the insert loop over repeats fresh detectors.

    One untimed warm-up pass runs first. Queries are not timed.

    Raises:
        InvalidParameterError: If the trace is empty or repeats < 1
    """
    if not len(trace):
        raise InvalidParameterError("cannot measure throughput on an empty trace")
    if repeats < 1:
        raise InvalidParameterError(f"repeats must be >= 1, got {repeats}")

    feed(factory(), trace)
    rates = []
    for _ in range(repeats):
        detector = factory()
        start = time.perf_counter()
        feed(detector, trace)
        elapsed = time.perf_counter() - start
        rates.append(len(trace) / elapsed if elapsed > 0 else float("inf"))
    return statistics.median(rates)


def best_weight_threshold(
    cells: list[tuple[FlowKey, int, Any]], answer: frozenset[FlowKey]
) -> tuple[int, float]:
    """The weight threshold maximizing F1 over live cells.

    Candidates are the distinct live weights; ties go to the higher threshold.

    Returns:
        (threshold, f1); (0, 0.0) when there are no cells
    """
    if not cells:
        return 0, 0.0
    ordered = sorted(cells, key=lambda cell: cell[1], reverse=True)
    best = (ordered[0][1], -1.0)
    hits = 0
    for index, (key, weight, _) in enumerate(ordered):
        hits += key in answer
        is_last_of_weight = index + 1 == len(ordered) or ordered[index + 1][1] != weight
        if not is_last_of_weight:
            continue
        reported = index + 1
        precision = hits / reported
        recall = hits / len(answer) if answer else 0.0
        f1 = f1_score(precision, recall)
        if f1 > best[1]:
            best = (weight, f1)
    return best[0], max(best[1], 0.0)


@dataclass
class RunResult:
    record: MetricsRecord
    report: ReportSet
    detector: Detector


def run_experiment(
    config: ExperimentConfig,
    trace: WindowedTrace,
    truth: GroundTruth | None = None,
    measure: bool | None = None,
) -> RunResult:
    """Build, feed, query and score one detector.

    PISketch in weight mode without an explicit threshold reports at its
    best-F1 weight threshold, flagged with weight_threshold_tuned.
    """
    criterion = config.criterion
    truth = truth.for_criterion(criterion) if truth else GroundTruth.from_trace(trace, criterion)

    detector = build_detector(config)
    feed(detector, trace)
    logger.debug(
        f"Fed {len(trace)} packets to {detector.name} ({config.digest()}, "
        f"{detector.memory_bits} bits)"
    )

    extras = dict(detector.metadata())
    if isinstance(detector, PISketch) and config.detector == "pisketch":
        if config.pi_weight_threshold is None:
            threshold, _ = best_weight_threshold(detector.cells(), truth.answer)
            extras["weight_threshold"] = threshold
            extras["weight_threshold_tuned"] = True
            report = detector.query(weight_threshold=threshold)
        else:
            extras["weight_threshold_tuned"] = False
            report = detector.query()
    else:
        report = detector.query()

    record = score(report, truth, detector.name)
    record.memory_bits = detector.memory_bits
    record.config = config.to_dict()
    record.config_digest = config.digest()
    record.extras = extras
    record.extras["are_population"] = "reported flows (PS and persistent-only)"

    if measure is None:
        measure = config.measure_throughput
    if measure:
        record.throughput_pps = measure_throughput(
            lambda: build_detector(config), trace, config.repeats
        )
    return RunResult(record, report, detector)
