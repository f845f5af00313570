"""Tests for scoring, experiment runs, sweeps, histograms and writers."""

import json

import pytest

from baselines.exact import ExactDetector
from flows.errors import ConfigurationError, InvalidParameterError
from flows.types import Criterion, FlowStats, ReportSet, WindowedTrace
from harness.distribution import distribution_report
from harness.metrics import CSV_FIELDS, GroundTruth, MetricsRecord, score
from harness.runner import (
    DETECTORS,
    ExperimentConfig,
    best_weight_threshold,
    build_detector,
    measure_throughput,
    run_experiment,
)
from harness.serialization import (
    metrics_json,
    write_histogram_csv,
    write_json,
    write_metrics_csv,
)
from harness.sweep import expand_grid, parse_range, sweep
from synth.generator import PopulationModel, synthesize


def _config(**changes):
    """Explicit defaults so a local ~/.psflow/config cannot change the tests."""
    values = dict(
        detector="exact",
        memory_kb=10,
        p0=20,
        d0=1.2,
        bucket_width=8,
        fp_bits=16,
        f_bits=8,
        p_bits=6,
        fof_bits=8,
        pof_bits=8,
        overflow_at_p0=True,
        pl_fraction=0.25,
        seed=1,
        measure_throughput=False,
    )
    values.update(changes)
    return ExperimentConfig(**values)


@pytest.fixture
def planted_trace():
    model = PopulationModel(flow_count=40, lambda_mean=2.0, planted_ps=((0.2, 5),))
    return synthesize(model, 150, seed=3).trace


def _truth(answer, **stats):
    return GroundTruth({int(k[1:]): v for k, v in stats.items()}, frozenset(answer))


class TestScore:
    def test_perfect(self):
        truth = _truth({1, 2}, k1=FlowStats(60, 55), k2=FlowStats(70, 60))
        report = ReportSet(dict(truth.stats), frozenset({1, 2}))
        record = score(report, truth)
        assert (record.precision, record.recall, record.f1) == (1.0, 1.0, 1.0)
        assert record.are == 0.0
        assert record.true_positives == 2

    def test_false_positive(self):
        truth = _truth({1}, k1=FlowStats(60, 55), k3=FlowStats(60, 58))
        report = ReportSet(dict(truth.stats), frozenset({1, 3}))
        record = score(report, truth, "x")
        assert record.precision == 0.5
        assert record.recall == 1.0
        assert record.f1 == pytest.approx(2 / 3)
        assert record.detector == "x"

    def test_relative_error(self):
        truth = _truth({1}, k1=FlowStats(260, 210))
        report = ReportSet({1: FlowStats(261, 210)}, frozenset({1}))
        record = score(report, truth)
        assert record.are_f == pytest.approx(1 / 260)
        assert record.are_f == pytest.approx(0.003846, abs=1e-6)
        assert record.are_p == 0.0
        assert record.are == pytest.approx(1 / 520)

    def test_are_includes_persistent_only_flows(self):
        truth = _truth(set(), k1=FlowStats(500, 100))
        report = ReportSet({1: FlowStats(400, 100)}, frozenset(), frozenset({1}))
        assert score(report, truth).are_f == pytest.approx(0.2)

    def test_empty_against_empty_is_perfect(self):
        record = score(ReportSet(), GroundTruth({}, frozenset()))
        assert (record.precision, record.recall, record.f1) == (1.0, 1.0, 1.0)
        assert record.are is None

    def test_empty_report_against_truth(self):
        truth = _truth({1}, k1=FlowStats(60, 55))
        record = score(ReportSet(), truth)
        assert (record.precision, record.recall, record.f1) == (0.0, 0.0, 0.0)


class TestGroundTruth:
    def test_from_trace(self, small_trace):
        truth = GroundTruth.from_trace(small_trace, Criterion(2, 1.5))
        assert truth.answer == {1}
        assert truth.stats[2] == FlowStats(3, 1)

    def test_for_criterion(self, small_trace):
        truth = GroundTruth.from_trace(small_trace, Criterion(2, 1.5))
        assert truth.for_criterion(Criterion(1, 3)).answer == {1, 2, 3}


class TestExperimentConfig:
    @pytest.mark.parametrize(
        "changes",
        [
            {"detector": "bogus"},
            {"memory_kb": 0},
            {"bucket_width": 0},
            {"pl_fraction": 1.0},
            {"repeats": 0},
        ],
    )
    def test_rejects_invalid(self, changes):
        with pytest.raises(ConfigurationError):
            _config(**changes)

    def test_rejects_bad_criterion(self):
        with pytest.raises(InvalidParameterError):
            _config(p0=0)

    def test_digest_ignores_throughput_knobs(self):
        base = _config()
        assert len(base.digest()) == 12
        assert base.digest() == base.with_(repeats=7, measure_throughput=True).digest()
        assert base.digest() != base.with_(p0=21).digest()

    def test_overflow_at_p0(self):
        assert _config(p0=50).widths().p_limit == 50
        assert _config(p0=50, overflow_at_p0=False).widths().p_limit == 64
        # p0 beyond 2^p_bits falls back to the full counter range
        assert _config(p0=100).widths().p_limit == 64
        assert _config(p0=50, p_overflow=10).widths().p_limit == 10

    def test_sketch_config_fits_budget(self):
        config = _config(detector="pssketch")
        assert config.sketch_config().memory_bits <= config.memory_bits

    @pytest.mark.parametrize("name", DETECTORS)
    def test_build_every_detector(self, name):
        config = _config(detector=name)
        detector = build_detector(config)
        assert detector.name == name
        if name != "exact":
            assert detector.memory_bits <= config.memory_bits


class TestRunExperiment:
    def test_exact_is_perfect(self, planted_trace):
        result = run_experiment(_config(), planted_trace)
        record = result.record
        assert record.f1 == 1.0
        assert record.are in (None, 0.0)
        assert record.config_digest == _config().digest()
        assert record.throughput_pps is None
        assert record.extras["are_population"].startswith("reported flows")

    def test_pisketch_threshold_tuned_flag(self, planted_trace):
        tuned = run_experiment(_config(detector="pisketch"), planted_trace).record
        assert tuned.extras["weight_threshold_tuned"] is True

        fixed = run_experiment(
            _config(detector="pisketch", pi_weight_threshold=100), planted_trace
        ).record
        assert fixed.extras["weight_threshold_tuned"] is False
        assert fixed.extras["weight_threshold"] == 100

    def test_pisketch_density_is_not_tuned(self, planted_trace):
        record = run_experiment(_config(detector="pisketch-density"), planted_trace).record
        assert "weight_threshold_tuned" not in record.extras

    def test_pssketch_reports_consistent_rows(self, planted_trace):
        record = run_experiment(_config(detector="pssketch"), planted_trace).record
        row = record.to_row()
        assert list(row) == CSV_FIELDS
        assert row["p0"] == 20
        assert 0.0 <= row["f1"] <= 1.0

    def test_throughput_measured_on_request(self, small_trace):
        record = run_experiment(_config(repeats=1), small_trace, measure=True).record
        assert record.throughput_pps > 0


class TestThroughput:
    def test_positive(self, small_trace):
        rate = measure_throughput(lambda: ExactDetector(Criterion(2, 1.5)), small_trace, 2)
        assert rate > 0

    def test_rejects_empty_trace(self):
        with pytest.raises(InvalidParameterError):
            measure_throughput(lambda: ExactDetector(Criterion(2, 1.5)), WindowedTrace())

    def test_rejects_zero_repeats(self, small_trace):
        with pytest.raises(InvalidParameterError):
            measure_throughput(lambda: ExactDetector(Criterion(2, 1.5)), small_trace, 0)


class TestBestWeightThreshold:
    def test_picks_best_f1(self):
        cells = [(1, 10, None), (2, 8, None), (3, 8, None), (4, 2, None)]
        threshold, f1 = best_weight_threshold(cells, frozenset({1, 2}))
        assert threshold == 8
        assert f1 == pytest.approx(0.8)

    def test_no_cells(self):
        assert best_weight_threshold([], frozenset({1})) == (0, 0.0)


class TestSweep:
    def test_parse_range(self):
        assert parse_range("1:5:1", int) == [1, 2, 3, 4, 5]
        assert parse_range("1.1:1.5:0.1") == [1.1, 1.2, 1.3, 1.4, 1.5]
        assert parse_range("8,16,32", int) == [8, 16, 32]

    @pytest.mark.parametrize("text", ["1:5", "1:5:0", "1:2:3:4"])
    def test_parse_range_rejects(self, text):
        with pytest.raises(ValueError):
            parse_range(text)

    def test_expand_grid(self):
        configs = expand_grid(_config(), {"d0": parse_range("1.1:1.5:0.1"), "p0": [40, 50, 60]})
        assert len(configs) == 15
        # p0 nests outside d0
        assert [(c.p0, c.d0) for c in configs[:2]] == [(40, 1.1), (40, 1.2)]

    def test_expand_grid_rejects_unknown_axis(self):
        with pytest.raises(ValueError):
            expand_grid(_config(), {"seed": [1, 2]})

    def test_sweep_rows_in_order(self, planted_trace):
        configs = expand_grid(_config(), {"p0": [10, 20, 30], "d0": [1.1, 1.2, 1.3, 1.4, 1.5]})
        records = sweep(configs, planted_trace, jobs=1)
        assert len(records) == 15
        assert [r.config["p0"] for r in records] == [c.p0 for c in configs]
        assert all(r.error is None and r.f1 == 1.0 for r in records)

    def test_failing_cell_becomes_error_row(self, planted_trace):
        configs = [_config(), _config(detector="pisketch", pi_weight_increment=1)]
        records = sweep(configs, planted_trace, jobs=1)
        assert records[0].error is None
        assert records[1].error.startswith("ConfigurationError")
        assert records[1].detector == "pisketch"

    def test_empty(self, planted_trace):
        assert sweep([], planted_trace) == []

    @pytest.mark.slow
    def test_parallel_matches_serial(self, planted_trace):
        configs = expand_grid(_config(detector="pssketch"), {"bucket_width": [4, 8, 16]})
        serial = sweep(configs, planted_trace, jobs=1)
        parallel = sweep(configs, planted_trace, jobs=2)
        assert [r.f1 for r in serial] == [r.f1 for r in parallel]


class TestDistribution:
    def test_small_trace(self, small_trace):
        report = distribution_report(small_trace)
        assert report.flows == 3
        assert [(b.low, b.high, b.count) for b in report.persistence] == [(1, 2, 2), (2, 4, 1)]
        assert report.density_flows == 1
        assert next(b for b in report.density if b.count).low == 1.3
        assert report.density[-1].high is None

    def test_single_window_flows(self):
        trace = WindowedTrace.from_pairs((key, key) for key in range(10))
        report = distribution_report(trace)
        assert [b.count for b in report.persistence] == [10]
        assert report.density_flows == 0

    def test_mass_is_conserved(self, planted_trace):
        report = distribution_report(planted_trace)
        assert sum(b.count for b in report.persistence) == report.flows

    def test_empty(self):
        report = distribution_report(WindowedTrace())
        assert report.flows == 0
        assert report.persistence == []


class TestSerialization:
    def test_metrics_csv(self, tmp_path):
        path = tmp_path / "out.csv"
        write_metrics_csv([MetricsRecord("exact", f1=1.0, config={"p0": 50})], path)
        header, row = path.read_text(encoding="utf-8").splitlines()
        assert header.split(",") == CSV_FIELDS
        values = dict(zip(CSV_FIELDS, row.split(","), strict=True))
        assert values["detector"] == "exact"
        assert values["p0"] == "50"
        assert values["are"] == ""

    def test_json_is_stable(self, tmp_path):
        path = tmp_path / "out.json"
        write_json(metrics_json([MetricsRecord("exact")], trace="t"), path)
        text = path.read_text(encoding="utf-8")
        assert text.endswith("}\n")
        data = json.loads(text)
        assert list(data) == ["metadata", "results"]
        assert data["results"][0]["detector"] == "exact"

    def test_histogram_csv(self, tmp_path, small_trace):
        path = tmp_path / "density.csv"
        write_histogram_csv(distribution_report(small_trace).density, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "bin_low,bin_high,count"
        assert lines[-1].endswith(",inf,0")


# 100 planted PS flows among ~8500: ten dense persistent flows and short-lived
# transients make up the rest of the ~10^5 packets
COMPARISON_MODEL = PopulationModel(
    flow_count=10,
    lambda_mean=2.0,
    planted_ps=((0.2, 100),),
    transient_count=8400,
    transient_span=5,
)
COMPARISON_KB = 64
# buckets wide enough that none fills, and a Protection Layer with room for
# every flow that reaches p0
PSSKETCH_TUNING = dict(bucket_width=512, fp_bits=32, pl_fraction=0.05, vectorized_scan=True)


@pytest.fixture(scope="module")
def comparison_trace():
    trace = synthesize(COMPARISON_MODEL, 400, seed=11).trace
    return trace, GroundTruth.from_trace(trace, Criterion(50, 1.2))


@pytest.mark.slow
class TestComparison:
    """PSSketch against the baselines on a trace with planted PS flows."""

    def _run(self, comparison_trace, detector, memory_kb=COMPARISON_KB, **changes):
        trace, truth = comparison_trace
        config = _config(detector=detector, memory_kb=memory_kb, p0=50, d0=1.2, **changes)
        return run_experiment(config, trace, truth)

    def test_trace_shape(self, comparison_trace):
        trace, truth = comparison_trace
        assert 80_000 <= len(trace) <= 120_000
        assert len(truth.answer) >= 90
        assert len(truth.answer) / len(truth.stats) < 0.02

    def test_pssketch_is_exact_when_uncontended(self, comparison_trace):
        result = self._run(comparison_trace, "pssketch", **PSSKETCH_TUNING)
        counters = result.detector.counters
        assert counters.replaced == counters.dropped == counters.pl_evictions == 0

        assert result.record.f1 == 1.0
        assert result.record.are_f == result.record.are_p == 0.0
        _, truth = comparison_trace
        for key, stats in result.report.stats.items():
            assert stats == truth.stats[key]

    def test_pisketch_scores_lower(self, comparison_trace):
        pssketch = self._run(comparison_trace, "pssketch", **PSSKETCH_TUNING).record
        pisketch = self._run(comparison_trace, "pisketch").record
        assert pisketch.extras["weight_threshold_tuned"]
        assert pssketch.f1 >= 0.95
        assert pisketch.f1 < pssketch.f1

    def test_strawman_needs_five_times_the_memory(self, comparison_trace):
        pssketch = self._run(comparison_trace, "pssketch", **PSSKETCH_TUNING).record
        strawman = self._run(comparison_trace, "strawman", memory_kb=5 * COMPARISON_KB).record
        assert strawman.memory_bits >= 5 * pssketch.memory_bits
        assert strawman.f1 < pssketch.f1

    def test_are_below_pisketch_density(self, comparison_trace):
        pssketch = self._run(comparison_trace, "pssketch", **PSSKETCH_TUNING).record
        density = self._run(comparison_trace, "pisketch-density").record
        assert density.reported > 0
        assert pssketch.are_f <= density.are_f / 10
        assert pssketch.are_p <= density.are_p / 10

    def test_small_budget_only_undercounts(self, comparison_trace):
        """Late entry and eviction lose early packets; nothing is counted twice."""
        result = self._run(comparison_trace, "pssketch", memory_kb=4, bucket_width=32, fp_bits=32)
        assert result.detector.counters.replaced > 0
        assert result.record.reported > 0

        _, truth = comparison_trace
        for key, stats in result.report.stats.items():
            exact = truth.stats[key]
            assert stats.frequency <= exact.frequency
            assert stats.persistence <= exact.persistence
