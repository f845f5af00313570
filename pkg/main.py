"""Main entry point for the psflow benchmark CLI."""

import argparse
import importlib.metadata
from dataclasses import fields
from typing import Any

from config import Config, load_overrides
from flows.errors import ConfigurationError, ConsistencyError, TraceFormatError
from flows.io import read_trace, write_trace
from flows.types import WindowedTrace
from harness.distribution import distribution_report
from harness.runner import DETECTORS, ExperimentConfig, run_experiment
from harness.serialization import (
    metrics_json,
    write_histogram_csv,
    write_json,
    write_metrics_csv,
)
from harness.sweep import expand_grid, parse_range, sweep
from sketch.dump import write_dump
from sketch.pssketch import PSSketch
from synth.generator import PopulationModel, synthesize
from synth.theory import (
    MIN_CONVERGENCE_LAMBDA,
    ejection_experiment,
    numeric_theory_stats,
    sample_flow_stats,
    theory_stats,
    validate_convergence,
)
from utils import get_log_file_path, get_logger, setup_logger, terminal_ui
from utils.runtime import ensure_runtime_dirs, get_config_file

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_IO = 2
EXIT_CONFIG = 3

# Closed form and pmf summation must agree to this relative error
NUMERIC_TOLERANCE = 1e-9

_EXPERIMENT_FIELDS = {f.name for f in fields(ExperimentConfig)}


# ----------------------------------------------------------------------
# Argument parsing
# ----------------------------------------------------------------------


def _add_trace_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--trace", type=str, help="Trace file (flow_id[,window] per line)")
    parser.add_argument(
        "--window-size",
        type=int,
        help="Packets per window for traces without a window column",
    )


def _add_generator_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("synthetic population")
    group.add_argument("--flows", type=int, help="Background flows active in every window")
    group.add_argument("--lambda-mean", type=float, help="Mean of the background lambda")
    group.add_argument("--lambda-std", type=float, help="Stddev of the background lambda")
    group.add_argument("--ps-flows", type=int, help="Planted persistent-and-sparse flows")
    group.add_argument("--ps-lambda", type=float, help="Lambda of the planted flows")
    group.add_argument("--transient-flows", type=int, help="Flows active for a short span only")
    group.add_argument("--transient-span", type=int, help="Active windows of a transient flow")
    group.add_argument("--windows", type=int, help="Number of windows to generate")


def _add_detector_args(parser: argparse.ArgumentParser, sweep: bool = False) -> None:
    """Detector flags. Sweep takes range specs (a:b:step or a,b,c) for the grid axes."""
    grid = str if sweep else None
    parser.add_argument(
        "--detector",
        type=str,
        help="all or a comma list" if sweep else f"One of {', '.join(DETECTORS)}",
    )
    parser.add_argument("--memory-kb", type=grid or float, help="Memory budget in KB")
    parser.add_argument("--p0", type=grid or int, help="Persistence threshold")
    parser.add_argument("--d0", type=grid or float, help="Density threshold")
    parser.add_argument("--bucket-width", type=grid or int, help="Entries per CL bucket (Y)")

    widths = parser.add_argument_group("PSSketch counters")
    widths.add_argument("--fp-bits", type=int)
    widths.add_argument("--f-bits", type=int)
    widths.add_argument("--p-bits", type=int)
    widths.add_argument("--fof-bits", type=int)
    widths.add_argument("--pof-bits", type=int)
    widths.add_argument("--p-overflow", type=int, help="CL persistence overflow value T")
    widths.add_argument("--pl-fraction", type=float, help="Share of memory given to the PL")
    widths.add_argument("--no-prune", dest="prune", action="store_false", default=None)
    widths.add_argument(
        "--no-burst-elimination", dest="burst_elimination", action="store_false", default=None
    )
    widths.add_argument("--vectorized-scan", action="store_true", default=None)

    parser.add_argument("--pi-weight-threshold", type=int, help="Fixed PISketch weight threshold")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--repeats", type=int, help="Timed throughput passes")
    parser.add_argument(
        "--no-throughput",
        dest="measure_throughput",
        action="store_false",
        default=None,
        help="Skip throughput measurement",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psflow",
        description="Find persistent-and-sparse flows and benchmark the detectors",
    )

    try:
        version = importlib.metadata.version("psflow")
    except importlib.metadata.PackageNotFoundError:
        version = "dev"
    parser.add_argument("--version", "-V", action="version", version=f"psflow {version}")
    parser.add_argument(
        "--verbose",
        "-v",
        action="store_true",
        help="Enable verbose logging to ~/.psflow/logs/",
    )
    parser.add_argument("--config", type=str, help="JSON or YAML file of option overrides")

    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run one detector on a trace")
    _add_detector_args(run)
    _add_trace_args(run)
    run.add_argument("--synthetic", action="store_true", help="Generate the trace instead")
    _add_generator_args(run)
    run.add_argument("--out", type=str, help="Metrics JSON output")
    run.add_argument("--csv", type=str, help="Metrics CSV output")
    run.add_argument("--dump-state", type=str, help="Write the PSSketch state dump")

    sweep_parser = subparsers.add_parser("sweep", help="Run a parameter grid")
    _add_detector_args(sweep_parser, sweep=True)
    _add_trace_args(sweep_parser)
    sweep_parser.add_argument("--synthetic", action="store_true", help="Generate the trace instead")
    _add_generator_args(sweep_parser)
    sweep_parser.add_argument("--jobs", type=int, help="Worker processes for accuracy cells")
    sweep_parser.add_argument("--out", type=str, help="Results CSV output")
    sweep_parser.add_argument("--json", type=str, help="Results JSON output")

    synth = subparsers.add_parser("synth", help="Generate a Poisson-model trace")
    _add_generator_args(synth)
    synth.add_argument("--seed", type=int, help="Master seed")
    synth.add_argument("--out", type=str, required=True, help="Trace output")

    theory = subparsers.add_parser("theory", help="Check the Poisson-model statistics")
    theory.add_argument("--lambda", dest="lam", type=float, required=True)
    theory.add_argument("--windows", type=int, default=100)
    theory.add_argument("--trials", type=int, default=10_000)
    theory.add_argument("--max-windows", type=int, default=1000)
    theory.add_argument("--seed", type=int, help="Master seed")
    theory.add_argument("--out", type=str, help="Report JSON output")

    dist = subparsers.add_parser("dist", help="Persistence and density histograms")
    _add_trace_args(dist)
    dist.add_argument("--out-prefix", type=str, required=True)

    return parser


# ----------------------------------------------------------------------
# Option resolution
# ----------------------------------------------------------------------


def _option(args: argparse.Namespace, overrides: dict[str, Any], name: str, default: Any = None):
    """Flag value, else the override file value, else default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return overrides.get(name, default)


def _experiment_config(
    args: argparse.Namespace, overrides: dict[str, Any], skip: tuple[str, ...] = ()
) -> ExperimentConfig:
    values = {}
    for name in _EXPERIMENT_FIELDS - set(skip):
        value = _option(args, overrides, name)
        if value is not None:
            values[name] = value
    split = values.get("strawman_split")
    if isinstance(split, str):
        values["strawman_split"] = tuple(int(p) for p in split.split(":"))
    elif split is not None:
        values["strawman_split"] = tuple(split)
    logger.debug(f"Resolved experiment options: {values}")
    return ExperimentConfig(**values)


def _population(args: argparse.Namespace, overrides: dict[str, Any]) -> tuple[PopulationModel, int]:
    ps_flows = int(_option(args, overrides, "ps_flows", 10))
    model = PopulationModel(
        flow_count=int(_option(args, overrides, "flows", 1000)),
        lambda_mean=float(_option(args, overrides, "lambda_mean", 2.0)),
        lambda_stddev=float(_option(args, overrides, "lambda_std", 0.5)),
        planted_ps=((float(_option(args, overrides, "ps_lambda", 0.2)), ps_flows),),
        transient_count=int(_option(args, overrides, "transient_flows", 0)),
        transient_span=int(_option(args, overrides, "transient_span", 10)),
    )
    windows = int(_option(args, overrides, "windows", 500))
    return model, windows


def _load_trace(args: argparse.Namespace, overrides: dict[str, Any]) -> tuple[WindowedTrace, str]:
    """The input trace and a short description of where it came from."""
    seed = int(_option(args, overrides, "seed", Config.SEED))
    path = _option(args, overrides, "trace")
    if getattr(args, "synthetic", False) or (path is None and overrides.get("synthetic")):
        model, windows = _population(args, overrides)
        return synthesize(model, windows, seed).trace, f"synthetic(seed={seed})"
    if path is None:
        raise ConfigurationError("give --trace PATH or --synthetic")
    return read_trace(path, _option(args, overrides, "window_size")), str(path)


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------


def cmd_run(args: argparse.Namespace, overrides: dict[str, Any]) -> int:
    config = _experiment_config(args, overrides)
    if args.dump_state and config.detector != "pssketch":
        raise ConfigurationError("--dump-state is only available for --detector pssketch")
    trace, source = _load_trace(args, overrides)

    settings = {
        "packets": len(trace),
        "windows": trace.num_windows,
        "memory_kb": config.memory_kb,
        "p0": config.p0,
        "d0": config.d0,
        "seed": config.seed,
    }
    if config.detector == "pssketch":
        # CL persistence counters report to the PL at this value
        settings["p_overflow"] = config.widths().p_limit
    terminal_ui.print_header("psflow run", f"{config.detector} on {source}")
    terminal_ui.print_config(settings)

    result = run_experiment(config, trace)
    if isinstance(result.detector, PSSketch):
        result.detector.check_invariants()

    record = result.record
    terminal_ui.print_metrics([record.to_row()], title="Run")
    if args.out:
        write_json(
            metrics_json([record], trace=source, packets=len(trace), windows=trace.num_windows),
            args.out,
        )
        terminal_ui.print_success(f"Metrics written to {args.out}")
    if args.csv:
        write_metrics_csv([record], args.csv)
        terminal_ui.print_success(f"Metrics written to {args.csv}")
    if args.dump_state:
        write_dump(result.detector, args.dump_state)
        terminal_ui.print_success(f"State dump written to {args.dump_state}")
    return EXIT_OK


def _sweep_axes(args: argparse.Namespace, overrides: dict[str, Any]) -> dict[str, list]:
    axes: dict[str, list] = {}
    detector = _option(args, overrides, "detector", "pssketch")
    axes["detector"] = (
        list(DETECTORS)
        if detector == "all"
        else [d.strip() for d in str(detector).split(",") if d.strip()]
    )
    for name, cast in (("memory_kb", float), ("p0", int), ("d0", float), ("bucket_width", int)):
        raw = _option(args, overrides, name)
        if raw is not None:
            axes[name] = parse_range(str(raw), cast)
    return axes


def cmd_sweep(args: argparse.Namespace, overrides: dict[str, Any]) -> int:
    axes = _sweep_axes(args, overrides)
    base = _experiment_config(args, overrides, skip=tuple(axes))
    configs = expand_grid(base, axes)
    jobs = int(_option(args, overrides, "jobs", Config.JOBS))
    if jobs < 1:
        raise ConfigurationError(f"jobs must be >= 1, got {jobs}")
    trace, source = _load_trace(args, overrides)

    terminal_ui.print_header("psflow sweep", f"{len(configs)} cells on {source}")
    records = sweep(configs, trace, jobs=jobs)
    terminal_ui.print_metrics([r.to_row() for r in records], title="Sweep")

    failed = [r for r in records if r.error]
    if failed:
        terminal_ui.print_warning(f"{len(failed)} of {len(records)} cells failed")
    if args.out:
        write_metrics_csv(records, args.out)
        terminal_ui.print_success(f"Results written to {args.out}")
    if args.json:
        write_json(
            metrics_json(records, trace=source, packets=len(trace), windows=trace.num_windows),
            args.json,
        )
        terminal_ui.print_success(f"Results written to {args.json}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace, overrides: dict[str, Any]) -> int:
    model, windows = _population(args, overrides)
    seed = int(_option(args, overrides, "seed", Config.SEED))
    generated = synthesize(model, windows, seed)

    write_trace(
        generated.trace,
        args.out,
        header=f"psflow synthetic trace seed={seed} windows={windows}",
    )
    truth_path = f"{args.out}.truth.json"
    write_json(generated.truth_dict(model), truth_path)

    terminal_ui.print_config(
        {
            "flows": model.total_flows,
            "packets": len(generated.trace),
            "windows": windows,
            "seed": seed,
        }
    )
    terminal_ui.print_success(f"Trace written to {args.out} (truth: {truth_path})")
    return EXIT_OK


def _relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def cmd_theory(args: argparse.Namespace, overrides: dict[str, Any]) -> int:
    lam = args.lam
    windows = args.windows
    seed = int(_option(args, overrides, "seed", Config.SEED))

    expected = theory_stats(lam, windows)
    numeric = numeric_theory_stats(lam, windows)
    sampled = sample_flow_stats(lam, windows, args.trials, seed)
    ejection = ejection_experiment(lam, windows, args.trials, seed)

    checks = {
        "closed form matches pmf sums": all(
            _relative_error(getattr(expected, name), getattr(numeric, name)) < NUMERIC_TOLERANCE
            for name in ("e_f", "e_p", "e_d")
        ),
    }
    checks.update(
        {f"sampled {name} within 3 SE": ok for name, ok in sampled.within(expected).items()}
    )

    report: dict[str, Any] = {
        "parameters": {"lambda": lam, "windows": windows, "trials": args.trials, "seed": seed},
        "theory": expected.to_dict(),
        "numeric": numeric.to_dict(),
        "sampled": {
            "mean_f": sampled.mean_f,
            "se_f": sampled.se_f,
            "mean_p": sampled.mean_p,
            "se_p": sampled.se_p,
            "mean_d": sampled.mean_d,
            "se_d": sampled.se_d,
        },
        "ejection": ejection.to_dict(),
    }

    if lam >= MIN_CONVERGENCE_LAMBDA:
        convergence = validate_convergence(
            lam, max_windows=args.max_windows, trials=args.trials, seed=seed
        )
        report["convergence"] = convergence.to_dict()
        checks["density error shrinks with windows"] = convergence.decreasing
        checks["density converges"] = convergence.converged
    else:
        terminal_ui.print_warning(
            f"Skipping convergence check: lambda below {MIN_CONVERGENCE_LAMBDA}"
        )
    checks["ejection leaves density unbiased"] = ejection.passed

    passed = all(checks.values())
    report["checks"] = checks
    report["passed"] = passed

    terminal_ui.print_header("Poisson model checks", f"lambda={lam}, windows={windows}")
    terminal_ui.print_config(
        {
            "E[f]": f"{expected.e_f:.6g}",
            "E[p]": f"{expected.e_p:.6g}",
            "E[d]": f"{expected.e_d:.6g}",
            "sampled d": f"{sampled.mean_d:.6g} ± {sampled.se_d:.2g}",
            "ejection CI": f"[{ejection.ci_low:.3g}, {ejection.ci_high:.3g}]",
        }
    )
    terminal_ui.print_checks(checks)
    if args.out:
        write_json(report, args.out)
        terminal_ui.print_success(f"Report written to {args.out}")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_dist(args: argparse.Namespace, overrides: dict[str, Any]) -> int:
    path = _option(args, overrides, "trace")
    if path is None:
        raise ConfigurationError("dist needs --trace PATH")
    trace = read_trace(path, _option(args, overrides, "window_size"))
    report = distribution_report(trace)

    persistence_path = f"{args.out_prefix}.persistence.csv"
    density_path = f"{args.out_prefix}.density.csv"
    write_histogram_csv(report.persistence, persistence_path)
    write_histogram_csv(report.density, density_path)

    low_density = sum(b.count for b in report.density if b.high is not None and b.high <= 1.5)
    terminal_ui.print_config(
        {
            "flows": report.flows,
            "flows with p >= 2": report.density_flows,
            "density below 1.5": low_density,
        }
    )
    terminal_ui.print_success(f"Histograms written to {persistence_path} and {density_path}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "theory": cmd_theory,
    "dist": cmd_dist,
}


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point.

    Returns:
        Process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    # Initialize runtime directories (create logs dir only in verbose mode)
    ensure_runtime_dirs(create_logs=args.verbose)

    # Initialize logging only in verbose mode
    if args.verbose:
        setup_logger()
        log_file = get_log_file_path()
        if log_file:
            terminal_ui.print_log_location(log_file)

    try:
        Config.validate()
    except ValueError as e:
        terminal_ui.print_error(f"{e} (in {get_config_file()})", title="Configuration Error")
        return EXIT_CONFIG

    overrides: dict[str, Any] = {}
    if args.config:
        try:
            overrides = load_overrides(args.config)
        except OSError as e:
            terminal_ui.print_error(str(e), title="Config File Error")
            return EXIT_IO
        except ValueError as e:
            terminal_ui.print_error(str(e), title="Configuration Error")
            return EXIT_CONFIG

    try:
        return COMMANDS[args.command](args, overrides)
    except TraceFormatError as e:
        terminal_ui.print_error(str(e), title="Trace Error")
        return EXIT_IO
    except OSError as e:
        terminal_ui.print_error(str(e), title="I/O Error")
        return EXIT_IO
    except ConsistencyError as e:
        logger.exception("Sketch invariant violated")
        terminal_ui.print_error(str(e), title="Consistency Error")
        return EXIT_CHECK_FAILED
    except ValueError as e:
        terminal_ui.print_error(str(e), title="Configuration Error")
        return EXIT_CONFIG
    except KeyboardInterrupt:
        terminal_ui.print_warning("Interrupted by user.")
        return 130


if __name__ == "__main__":
    raise SystemExit(main())
