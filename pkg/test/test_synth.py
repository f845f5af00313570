"""Tests for the Poisson trace generator."""

import numpy as np
import pytest
from scipy.stats import chisquare, poisson

from flows.errors import InvalidParameterError
from flows.model import exact_stats
from synth.generator import (
    LAMBDA_FLOOR,
    FlowModel,
    FlowRole,
    PopulationModel,
    draw_lambdas,
    flow_keys,
    generate_trace,
    synthesize,
)


class TestPopulationModel:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"lambda_mean": 0.0},
            {"lambda_stddev": -1.0},
            {"flow_count": -1},
            {"transient_span": 0},
            {"planted_ps": ((0.0, 3),)},
            {"planted_ps": ((0.5, -1),)},
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            PopulationModel(**kwargs)

    def test_total_flows(self):
        model = PopulationModel(flow_count=5, planted_ps=((0.2, 3), (0.5, 2)), transient_count=4)
        assert model.total_flows == 14

    def test_flow_model_rejects_zero_rate(self):
        with pytest.raises(InvalidParameterError):
            FlowModel(0.0, 10)

    def test_flow_model_sample(self):
        counts = FlowModel(0.5, 40).sample(np.random.default_rng(0))
        assert counts.shape == (40,)
        assert (counts >= 0).all()


class TestSynthesize:
    """Determinism, roles and the statistics of generated flows."""

    def test_same_seed_same_trace(self):
        model = PopulationModel(flow_count=50, planted_ps=((0.3, 5),), transient_count=20)
        assert synthesize(model, 40, seed=9).trace == synthesize(model, 40, seed=9).trace

    def test_seed_changes_trace(self):
        model = PopulationModel(flow_count=50)
        assert generate_trace(model, 40, seed=1) != generate_trace(model, 40, seed=2)

    def test_zero_flows(self):
        trace = generate_trace(PopulationModel(), 10, seed=1)
        assert len(trace) == 0

    def test_rejects_zero_windows(self):
        with pytest.raises(InvalidParameterError):
            synthesize(PopulationModel(flow_count=1), 0, seed=1)

    def test_roles_and_truth(self):
        model = PopulationModel(flow_count=3, planted_ps=((0.5, 2),), transient_count=4)
        generated = synthesize(model, 30, seed=5)
        roles = [f.role for f in generated.flows]
        assert roles == [FlowRole.BACKGROUND] * 3 + [FlowRole.PLANTED] * 2 + [
            FlowRole.TRANSIENT
        ] * 4
        assert len(generated.planted_keys) == 2

        truth = generated.truth_dict(model)
        assert truth["planted_ps"] == [str(k) for k in generated.planted_keys]
        assert truth["model"]["transient_count"] == 4
        assert len(truth["flows"]) == 9

    def test_transient_flows_stay_in_span(self):
        model = PopulationModel(transient_count=30, transient_span=5, lambda_mean=3.0)
        generated = synthesize(model, 50, seed=3)
        spans = {f.key: (f.start, f.start + f.span) for f in generated.flows}
        for record in generated.trace:
            start, stop = spans[record.flow]
            assert start <= record.window < stop
        stats = exact_stats(generated.trace)
        assert max(s.persistence for s in stats.values()) <= 5

    def test_mean_frequency(self):
        # 1000 independent flows at lambda 2 over 10 windows: E[f] = 20
        model = PopulationModel(planted_ps=((2.0, 1000),))
        generated = synthesize(model, 10, seed=11)
        stats = exact_stats(generated.trace)
        f = np.array([stats[k].frequency if k in stats else 0 for k in generated.planted_keys])
        assert abs(f.mean() - 20.0) <= 3 * f.std(ddof=1) / np.sqrt(f.size)

    def test_planted_density_is_low(self):
        model = PopulationModel(planted_ps=((0.5, 300),))
        generated = synthesize(model, 200, seed=2)
        stats = exact_stats(generated.trace)
        mean_density = np.mean([s.density_value for s in stats.values()])
        # lambda / (1 - e^-lambda) ~ 1.271
        assert mean_density == pytest.approx(1.271, abs=0.02)

    def test_window_counts_fit_poisson(self):
        """Chi-square goodness of fit of one flow's per-window counts."""
        windows = 20_000
        generated = synthesize(PopulationModel(planted_ps=((1.0, 1),)), windows, seed=6)
        counts = np.bincount([r.window for r in generated.trace], minlength=windows)

        observed = np.array([np.sum(counts == k) for k in range(5)] + [np.sum(counts >= 5)])
        expected = windows * np.append(poisson.pmf(np.arange(5), 1.0), poisson.sf(4, 1.0))
        assert observed.sum() == windows
        assert chisquare(observed, expected).pvalue > 1e-3


class TestHelpers:
    def test_draw_lambdas_respects_floor(self):
        rng = np.random.default_rng(0)
        values = draw_lambdas(rng, 0.01, 1.0, 2000)
        assert values.size == 2000
        assert (values >= LAMBDA_FLOOR).all()

    def test_flow_keys_distinct(self):
        keys = flow_keys(3, 10_000)
        assert len(set(keys)) == 10_000
        assert flow_keys(3, 5) == keys[:5]
