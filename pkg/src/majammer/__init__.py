"""Movable-antenna jammer design against a reactive multiuser downlink."""

from .fairness_ao import optimal_wj_given_x, run_algorithm2
from .harness import ExperimentSpec, ResultRow, run_scheme, sweep
from .model import ConfigError, SystemConfig, Topology, derive_topology
from .special import ideal_positions, lb_minrate, lb_sumrate
from .st_response import evaluate_jammer_action
from .sumrate_ao import run_algorithm1

__all__ = [
    "ConfigError",
    "ExperimentSpec",
    "ResultRow",
    "SystemConfig",
    "Topology",
    "derive_topology",
    "evaluate_jammer_action",
    "ideal_positions",
    "lb_minrate",
    "lb_sumrate",
    "optimal_wj_given_x",
    "run_algorithm1",
    "run_algorithm2",
    "run_scheme",
    "sweep",
]

__version__ = "0.1.0"
