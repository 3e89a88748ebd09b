"""Simulation and stability analysis of regime-switching jump diffusions."""

from .model import (
    LinearizedModel,
    MarkLaw,
    ModelError,
    RateMatrix,
    RegimeModel,
    builtin_example,
    linearize,
    validate_q_property,
)
from .engine import SimConfig, simulate_coupled_pair, simulate_ensemble, simulate_path

__version__ = "0.1.0"

__all__ = [
    "LinearizedModel",
    "MarkLaw",
    "ModelError",
    "RateMatrix",
    "RegimeModel",
    "SimConfig",
    "builtin_example",
    "linearize",
    "simulate_coupled_pair",
    "simulate_ensemble",
    "simulate_path",
    "validate_q_property",
]
