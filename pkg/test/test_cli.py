import json
from pathlib import Path

import pytest

import main as psflow_main


class _DummyConsole:
    def __init__(self):
        self.lines: list[str] = []

    def print(self, *args, **kwargs):  # noqa: ARG002
        self.lines.append(" ".join(str(a) for a in args))


def _setup_common(monkeypatch):
    calls = {"error": [], "info": [], "success": [], "warning": []}
    console = _DummyConsole()

    monkeypatch.setattr(psflow_main, "ensure_runtime_dirs", lambda create_logs=False: None)
    monkeypatch.setattr(psflow_main, "setup_logger", lambda: None)

    monkeypatch.setattr(
        psflow_main.terminal_ui,
        "print_error",
        lambda msg, title="Error": calls["error"].append((title, msg)),
    )
    monkeypatch.setattr(
        psflow_main.terminal_ui,
        "print_info",
        lambda msg: calls["info"].append(msg),
    )
    monkeypatch.setattr(
        psflow_main.terminal_ui,
        "print_success",
        lambda msg: calls["success"].append(msg),
    )
    monkeypatch.setattr(
        psflow_main.terminal_ui,
        "print_warning",
        lambda msg: calls["warning"].append(msg),
    )
    monkeypatch.setattr(psflow_main.terminal_ui, "console", console)

    return calls, console


@pytest.fixture
def trace_file(tmp_path, small_trace):
    path = tmp_path / "small.trace"
    path.write_text(
        "# flow,window\n" + "".join(f"{r.flow},{r.window}\n" for r in small_trace),
        encoding="utf-8",
    )
    return path


# Small synthetic population shared by run and sweep tests
SYNTHETIC = "--synthetic --flows 30 --ps-flows 3 --windows 60 --seed 4"


def _results(path: Path) -> list[dict]:
    return json.loads(path.read_text(encoding="utf-8"))["results"]


class TestRun:
    def test_exact_on_trace_file(self, monkeypatch, tmp_path, trace_file):
        calls, _ = _setup_common(monkeypatch)
        out = tmp_path / "run.json"

        code = psflow_main.main(
            f"run --detector exact --trace {trace_file} --p0 2 --d0 1.5 --no-throughput "
            f"--out {out}".split()
        )

        assert code == 0
        assert calls["error"] == []
        (result,) = _results(out)
        assert result["detector"] == "exact"
        assert result["f1"] == 1.0
        assert result["true_ps"] == 1
        assert result["throughput_pps"] is None

    def test_window_size_for_bare_trace(self, monkeypatch, tmp_path):
        _setup_common(monkeypatch)
        path = tmp_path / "bare.trace"
        path.write_text("1\n1\n2\n1\n", encoding="utf-8")
        out = tmp_path / "run.json"

        code = psflow_main.main(
            f"run --detector exact --trace {path} --window-size 2 --no-throughput "
            f"--out {out}".split()
        )

        assert code == 0
        assert json.loads(out.read_text(encoding="utf-8"))["metadata"]["windows"] == 2

    def test_pssketch_is_deterministic(self, monkeypatch, tmp_path):
        _setup_common(monkeypatch)
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.json"
            dump = tmp_path / f"{name}.dump"
            code = psflow_main.main(
                f"run --detector pssketch --memory-kb 4 --p0 10 --no-throughput --out {out} "
                f"--dump-state {dump} {SYNTHETIC}".split()
            )
            assert code == 0
            outputs.append((_results(out), dump.read_text(encoding="utf-8")))

        assert outputs[0] == outputs[1]
        assert outputs[0][1].startswith("window ")

    @pytest.mark.parametrize(
        "extra, expected",
        [("", 10), ("--p-overflow 32", 32), ("--p0 100", 64)],
    )
    def test_config_table_shows_p_overflow(self, monkeypatch, extra, expected):
        _setup_common(monkeypatch)
        monkeypatch.setattr(psflow_main.Config, "OVERFLOW_AT_P0", True)
        shown = []
        monkeypatch.setattr(psflow_main.terminal_ui, "print_config", shown.append)

        code = psflow_main.main(
            f"run --detector pssketch --memory-kb 4 --p0 10 {extra} --no-throughput "
            f"{SYNTHETIC}".split()
        )

        assert code == 0
        assert shown[0]["p_overflow"] == expected

    def test_config_table_omits_p_overflow_for_baselines(self, monkeypatch, trace_file):
        _setup_common(monkeypatch)
        shown = []
        monkeypatch.setattr(psflow_main.terminal_ui, "print_config", shown.append)

        code = psflow_main.main(
            f"run --detector exact --trace {trace_file} --no-throughput".split()
        )

        assert code == 0
        assert "p_overflow" not in shown[0]

    def test_csv_output(self, monkeypatch, tmp_path, trace_file):
        _setup_common(monkeypatch)
        csv_path = tmp_path / "run.csv"

        code = psflow_main.main(
            f"run --detector exact --trace {trace_file} --no-throughput --csv {csv_path}".split()
        )

        assert code == 0
        header, row = csv_path.read_text(encoding="utf-8").splitlines()
        assert header.startswith("detector,config_digest,memory_bits")
        assert row.startswith("exact,")

    def test_missing_trace_file(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)

        code = psflow_main.main(["run", "--trace", str(tmp_path / "missing.trace")])

        assert code == 2
        assert calls["error"][0][0] == "I/O Error"

    def test_malformed_trace(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)
        path = tmp_path / "bad.trace"
        path.write_text("1,0\n2,zero\n", encoding="utf-8")

        code = psflow_main.main(["run", "--detector", "exact", "--trace", str(path)])

        assert code == 2
        title, message = calls["error"][0]
        assert title == "Trace Error"
        assert "line 2" in message

    def test_trace_not_utf8(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)
        path = tmp_path / "binary.trace"
        path.write_bytes(b"1,0\n\xff\xfe,0\n")

        code = psflow_main.main(["run", "--detector", "exact", "--trace", str(path)])

        assert code == 2
        assert calls["error"][0][0] == "Trace Error"

    def test_zero_window_size(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)
        path = tmp_path / "bare.trace"
        path.write_text("1\n2\n", encoding="utf-8")

        code = psflow_main.main(
            ["run", "--detector", "exact", "--trace", str(path), "--window-size", "0"]
        )

        assert code == 3
        assert calls["error"][0][0] == "Configuration Error"

    def test_no_trace_source(self, monkeypatch):
        calls, _ = _setup_common(monkeypatch)

        assert psflow_main.main(["run", "--detector", "exact"]) == 3
        assert calls["error"][0][0] == "Configuration Error"

    def test_unknown_detector(self, monkeypatch, trace_file):
        calls, _ = _setup_common(monkeypatch)

        code = psflow_main.main(["run", "--detector", "bloom", "--trace", str(trace_file)])

        assert code == 3
        assert "unknown detector" in calls["error"][0][1]

    def test_dump_state_needs_pssketch(self, monkeypatch, tmp_path, trace_file):
        calls, _ = _setup_common(monkeypatch)

        code = psflow_main.main(
            f"run --detector strawman --trace {trace_file} "
            f"--dump-state {tmp_path / 'x.dump'}".split()
        )

        assert code == 3
        assert "--dump-state" in calls["error"][0][1]
        assert not (tmp_path / "x.dump").exists()


class TestConfigOverrides:
    def test_json_overrides(self, monkeypatch, tmp_path, trace_file):
        _setup_common(monkeypatch)
        overrides = tmp_path / "run.json"
        overrides.write_text(
            json.dumps(
                {
                    "detector": "exact",
                    "trace": str(trace_file),
                    "p0": 2,
                    "d0": 1.5,
                    "measure-throughput": False,
                }
            ),
            encoding="utf-8",
        )
        out = tmp_path / "out.json"

        code = psflow_main.main(["--config", str(overrides), "run", "--out", str(out)])

        assert code == 0
        (result,) = _results(out)
        assert result["config"]["p0"] == 2
        assert result["f1"] == 1.0

    def test_flags_beat_overrides(self, monkeypatch, tmp_path, trace_file):
        _setup_common(monkeypatch)
        overrides = tmp_path / "run.yaml"
        overrides.write_text(
            f"detector: exact\ntrace: {trace_file}\np0: 2\nmeasure_throughput: false\n",
            encoding="utf-8",
        )
        out = tmp_path / "out.json"

        code = psflow_main.main(["--config", str(overrides), "run", "--p0", "3", "--out", str(out)])

        assert code == 0
        assert _results(out)[0]["config"]["p0"] == 3

    def test_missing_config_file(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)

        code = psflow_main.main(["--config", str(tmp_path / "nope.json"), "run"])

        assert code == 2
        assert calls["error"][0][0] == "Config File Error"

    def test_config_must_be_mapping(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)
        path = tmp_path / "list.json"
        path.write_text("[1, 2]", encoding="utf-8")

        assert psflow_main.main(["--config", str(path), "run"]) == 3
        assert calls["error"][0][0] == "Configuration Error"


class TestSweep:
    def test_grid_rows(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)
        out = tmp_path / "sweep.csv"
        out_json = tmp_path / "sweep.json"

        code = psflow_main.main(
            f"sweep --detector exact --p0 40:60:10 --d0 1.1:1.5:0.1 --no-throughput --out {out} "
            f"--json {out_json} {SYNTHETIC}".split()
        )

        assert code == 0
        assert calls["warning"] == []
        lines = out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1 + 15
        results = _results(out_json)
        assert [(r["config"]["p0"], r["config"]["d0"]) for r in results[:2]] == [
            (40, 1.1),
            (40, 1.2),
        ]

    def test_failed_cells_are_reported(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)
        overrides = tmp_path / "sweep.yaml"
        overrides.write_text("pi_weight_increment: 1\n", encoding="utf-8")
        out = tmp_path / "sweep.csv"

        code = psflow_main.main(
            f"--config {overrides} sweep --detector exact,pisketch --no-throughput --out {out} "
            f"{SYNTHETIC}".split()
        )

        assert code == 0
        assert calls["warning"] == ["1 of 2 cells failed"]

    def test_bad_range(self, monkeypatch):
        calls, _ = _setup_common(monkeypatch)

        code = psflow_main.main(f"sweep --detector exact --p0 1:5 {SYNTHETIC}".split())

        assert code == 3
        assert calls["error"][0][0] == "Configuration Error"


class TestSynth:
    def test_writes_trace_and_truth(self, monkeypatch, tmp_path):
        _setup_common(monkeypatch)
        out = tmp_path / "syn.trace"

        code = psflow_main.main(
            f"synth --flows 10 --ps-flows 2 --windows 20 --seed 3 --out {out}".split()
        )

        assert code == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# psflow synthetic trace seed=3 windows=20"
        truth = json.loads(Path(f"{out}.truth.json").read_text(encoding="utf-8"))
        assert truth["packets"] == len(lines) - 1
        assert len(truth["planted_ps"]) == 2

    def test_same_seed_same_file(self, monkeypatch, tmp_path):
        _setup_common(monkeypatch)
        paths = [tmp_path / "a.trace", tmp_path / "b.trace"]
        for path in paths:
            assert psflow_main.main(
                ["synth", "--flows", "5", "--windows", "10", "--seed", "8", "--out", str(path)]
            ) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_zero_flows(self, monkeypatch, tmp_path):
        _setup_common(monkeypatch)
        out = tmp_path / "empty.trace"

        code = psflow_main.main(
            ["synth", "--flows", "0", "--ps-flows", "0", "--windows", "5", "--out", str(out)]
        )

        assert code == 0
        assert all(line.startswith("#") for line in out.read_text(encoding="utf-8").splitlines())

    def test_rejects_zero_windows(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)

        code = psflow_main.main(["synth", "--windows", "0", "--out", str(tmp_path / "x")])

        assert code == 3
        assert calls["error"]


class TestTheory:
    def test_report(self, monkeypatch, tmp_path):
        _setup_common(monkeypatch)
        out = tmp_path / "theory.json"

        code = psflow_main.main(
            f"theory --lambda 1 --windows 20 --trials 2000 --max-windows 100 --seed 2 "
            f"--out {out}".split()
        )

        report = json.loads(out.read_text(encoding="utf-8"))
        assert code == (0 if report["passed"] else 1)
        assert report["checks"]["closed form matches pmf sums"] is True
        assert report["theory"]["e_d"] == pytest.approx(1.58198, abs=1e-5)
        assert set(report) >= {"theory", "numeric", "sampled", "ejection", "convergence"}

    def test_small_lambda_skips_convergence(self, monkeypatch, tmp_path):
        calls, _ = _setup_common(monkeypatch)
        out = tmp_path / "theory.json"

        psflow_main.main(
            ["theory", "--lambda", "0.005", "--windows", "10", "--trials", "200", "--out", str(out)]
        )

        assert "convergence" not in json.loads(out.read_text(encoding="utf-8"))
        assert any("convergence" in w for w in calls["warning"])

    def test_rejects_zero_lambda(self, monkeypatch):
        calls, _ = _setup_common(monkeypatch)

        assert psflow_main.main(["theory", "--lambda", "0"]) == 3
        assert calls["error"][0][0] == "Configuration Error"


class TestDist:
    def test_histograms(self, monkeypatch, tmp_path, trace_file):
        calls, _ = _setup_common(monkeypatch)
        prefix = tmp_path / "hist"

        code = psflow_main.main(["dist", "--trace", str(trace_file), "--out-prefix", str(prefix)])

        assert code == 0
        persistence = Path(f"{prefix}.persistence.csv").read_text(encoding="utf-8").splitlines()
        assert persistence == ["bin_low,bin_high,count", "1,2,2", "2,4,1"]
        density = Path(f"{prefix}.density.csv").read_text(encoding="utf-8").splitlines()
        assert len(density) == 1 + 41
        assert len(calls["success"]) == 1

    def test_requires_trace(self, monkeypatch, tmp_path):
        _setup_common(monkeypatch)

        code = psflow_main.main(["dist", "--out-prefix", str(tmp_path / "h")])

        assert code == 3
