"""Simulation laboratory: rollout designs, correlated binary generation and experiments."""

from .design import staircase
from .experiment import run_experiment, run_sweep
from .generator import block_sample, qaqish_sample, simulate_trial
from .presets import preset, preset_names

__all__ = [
    "block_sample",
    "preset",
    "preset_names",
    "qaqish_sample",
    "run_experiment",
    "run_sweep",
    "simulate_trial",
    "staircase",
]
