"""Latency minimization for an amplifying-surface-aided edge computing
system: channel synthesis, a block-coordinate solver built on an
embedded conic subproblem solver, and a sweep harness with CSV export.
"""

from .bcd import bcd_solve, evaluate_latency, init_solution
from .channel import ChannelSet, build_geometry, channels_for, synthesize_channels
from .config import (ComputeProfile, ConfigError, ScenarioConfig, dbm_to_watts,
                     default_config, validate_config, watts_to_dbm, with_seed)
from .experiments import (evaluate_quantized, passive_baseline, quantize_phases,
                          run_convergence, sweep_location, sweep_m)
from .state import IterationTrace, SolutionState, constraint_residuals, validate_state

__version__ = "0.1.0"

__all__ = [
    "ChannelSet", "ComputeProfile", "ConfigError", "IterationTrace",
    "ScenarioConfig", "SolutionState", "bcd_solve", "build_geometry",
    "channels_for", "constraint_residuals", "dbm_to_watts", "default_config",
    "evaluate_latency", "evaluate_quantized", "init_solution", "passive_baseline",
    "quantize_phases", "run_convergence", "sweep_location", "sweep_m",
    "synthesize_channels", "validate_config", "validate_state", "watts_to_dbm",
    "with_seed",
]
