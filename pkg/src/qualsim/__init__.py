"""Qualitative spatial simulation as constraint satisfaction."""

from .calculus import Calculus, CalculusError, builtin_cardinal, builtin_rcc8, load_calculus, validate
from .simulate import Scenario, SimulationResult, Status, enumerate_simulations, load_scenario, simulate
from .temporal import evaluate, nnf, parse, parse_rule

__all__ = [
    "Calculus",
    "CalculusError",
    "Scenario",
    "SimulationResult",
    "Status",
    "builtin_cardinal",
    "builtin_rcc8",
    "enumerate_simulations",
    "evaluate",
    "load_calculus",
    "load_scenario",
    "nnf",
    "parse",
    "parse_rule",
    "simulate",
    "validate",
]
