"""Poisson-model trace generator and theory validators."""

from .generator import (
    LAMBDA_FLOOR,
    FlowModel,
    FlowRole,
    PopulationModel,
    SyntheticFlow,
    SyntheticTrace,
    generate_trace,
    synthesize,
)
from .theory import (
    ConvergenceReport,
    EjectionReport,
    SampledStats,
    TheoryStats,
    ejection_experiment,
    numeric_theory_stats,
    sample_flow_stats,
    theory_stats,
    validate_convergence,
)

__all__ = [
    "LAMBDA_FLOOR",
    "ConvergenceReport",
    "EjectionReport",
    "FlowModel",
    "FlowRole",
    "PopulationModel",
    "SampledStats",
    "SyntheticFlow",
    "SyntheticTrace",
    "TheoryStats",
    "ejection_experiment",
    "generate_trace",
    "numeric_theory_stats",
    "sample_flow_stats",
    "synthesize",
    "theory_stats",
    "validate_convergence",
]
