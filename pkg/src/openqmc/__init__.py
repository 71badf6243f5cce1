"""Diagrammatic Monte Carlo engine for spin-boson reduced dynamics."""

__version__ = "0.1.0"

from .bath import BathModes, BathSpec, correlation_B, discretize_bath, estimate_B_bound
from .driver import (
    RunConfig,
    Trajectory,
    VarianceResult,
    expected_observable,
    load_config,
    run_experiment,
    variance_harness,
)
from .dyson import Setup, run_dyson_direct, run_dyson_reuse
from .btb import BoldTable, run_btb, solve_bold_propagator
from .errors import ConfigError, NumericalCheckError

__all__ = [
    "__version__",
    "BathModes",
    "BathSpec",
    "BoldTable",
    "ConfigError",
    "NumericalCheckError",
    "RunConfig",
    "Setup",
    "Trajectory",
    "VarianceResult",
    "correlation_B",
    "discretize_bath",
    "estimate_B_bound",
    "expected_observable",
    "load_config",
    "run_btb",
    "run_dyson_direct",
    "run_dyson_reuse",
    "run_experiment",
    "solve_bold_propagator",
    "variance_harness",
]
