"""Parameter sweeps over detectors, thresholds, bucket widths and memory."""

import asyncio
import itertools
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Any

from flows.types import WindowedTrace
from utils import get_logger

from .metrics import GroundTruth, MetricsRecord
from .runner import ExperimentConfig, build_detector, measure_throughput, run_experiment

logger = get_logger(__name__)

# Sweepable ExperimentConfig fields, in grid nesting order (outermost first)
GRID_AXES = ("detector", "memory_kb", "p0", "d0", "bucket_width")


def parse_range(text: str, cast=float) -> list:
    """Parse "a:b:step" (inclusive) or "a,b,c" into a list of values.

    Raises:
        ValueError: On malformed ranges or a non-positive step
    """
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must look like start:stop:step, got {text!r}")
        start, stop, step = (cast(p) for p in parts)
        if step <= 0:
            raise ValueError(f"range step must be > 0, got {text!r}")
        values = []
        value = start
        # small epsilon keeps float ranges like 1.1:1.5:0.1 inclusive
        while value <= stop + (step * 1e-9 if cast is float else 0):
            values.append(round(value, 10) if cast is float else value)
            value = start + step * len(values)
        return values
    return [cast(p) for p in text.split(",") if p.strip()]


def expand_grid(base: ExperimentConfig, axes: dict[str, Sequence[Any]]) -> list[ExperimentConfig]:
    """Cartesian product of axes applied to base, in GRID_AXES nesting order."""
    names = [name for name in GRID_AXES if name in axes]
    unknown = set(axes) - set(GRID_AXES)
    if unknown:
        raise ValueError(f"cannot sweep over {', '.join(sorted(unknown))}")
    configs = []
    for values in itertools.product(*(axes[name] for name in names)):
        configs.append(base.with_(**dict(zip(names, values, strict=True))))
    return configs


# ----------------------------------------------------------------------
# Worker side
# ----------------------------------------------------------------------

_worker_trace: WindowedTrace | None = None
_worker_truth: GroundTruth | None = None


def _init_worker(trace: WindowedTrace, truth: GroundTruth) -> None:
    global _worker_trace, _worker_truth
    _worker_trace = trace
    _worker_truth = truth


def _run_cell(config: ExperimentConfig) -> MetricsRecord:
    assert _worker_trace is not None
    return run_experiment(config, _worker_trace, _worker_truth, measure=False).record


def _failed(config: ExperimentConfig, error: BaseException) -> MetricsRecord:
    logger.warning(
        f"Sweep cell {config.digest()} ({config.detector}) failed: {error}", exc_info=error
    )
    return MetricsRecord(
        detector=config.detector,
        config=config.to_dict(),
        config_digest=config.digest(),
        error=f"{type(error).__name__}: {error}",
    )


async def _run_cells(
    configs: list[ExperimentConfig], trace: WindowedTrace, truth: GroundTruth, jobs: int
) -> list[MetricsRecord]:
    loop = asyncio.get_running_loop()
    results: list[MetricsRecord | None] = [None] * len(configs)

    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_init_worker, initargs=(trace, truth)
    ) as pool:

        async def run_single(index: int) -> None:
            try:
                results[index] = await loop.run_in_executor(pool, _run_cell, configs[index])
            except asyncio.CancelledError:
                raise
            except Exception as e:
                results[index] = _failed(configs[index], e)

        async with asyncio.TaskGroup() as tg:
            for index in range(len(configs)):
                tg.create_task(run_single(index))

    return [r for r in results if r is not None]


def sweep(
    configs: Iterable[ExperimentConfig], trace: WindowedTrace, jobs: int = 1
) -> list[MetricsRecord]:
    """Run every config on trace; one MetricsRecord per config, in input order.

    Accuracy cells run on up to jobs worker processes. Throughput is measured
    afterwards, one cell at a time in this process. A failing cell becomes a
    row with `error` set and the sweep continues.
    """
    configs = list(configs)
    if not configs:
        return []
    truth = GroundTruth.from_trace(trace, configs[0].criterion)

    if jobs > 1:
        records = asyncio.run(_run_cells(configs, trace, truth, jobs))
    else:
        records = []
        for config in configs:
            try:
                records.append(run_experiment(config, trace, truth, measure=False).record)
            except Exception as e:
                records.append(_failed(config, e))

    for config, record in zip(configs, records, strict=True):
        if record.error or not config.measure_throughput or not len(trace):
            continue
        try:
            record.throughput_pps = measure_throughput(
                lambda c=config: build_detector(c), trace, config.repeats
            )
        except Exception as e:
            logger.warning(f"Throughput measurement failed for {config.digest()}: {e}")
    return records
