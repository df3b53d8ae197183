"""Seeded simulation of human-AI delegation strategies from individuals to institutions."""

from .engine import (
    CollectiveEquilibriumLabel,
    SimResult,
    classify_collective,
    compile_scenario,
    run_canonical_path,
    run_isolated_agent,
    run_scenario,
    sweep,
)
from .strategy_core import Regime, SignalVector, Strategy

__all__ = [
    "CollectiveEquilibriumLabel", "Regime", "SignalVector", "SimResult", "Strategy",
    "classify_collective", "compile_scenario", "run_canonical_path", "run_isolated_agent",
    "run_scenario", "sweep",
]
__version__ = "0.1.0"
