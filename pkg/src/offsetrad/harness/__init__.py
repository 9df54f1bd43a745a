"""Synthetic scenarios, experiments, persistence and the command line."""
from .config import ConfigError, ExperimentConfig
from .experiments import ExperimentResult, run_experiment
from .rates import RateFit, RateFitError, fit_rate
from .run import run, run_config
from .scenarios import NoiseSpec, Problem, excess_loss, generate

__all__ = [
    "ConfigError", "ExperimentConfig", "ExperimentResult", "run_experiment", "RateFit",
    "RateFitError", "fit_rate", "run", "run_config", "NoiseSpec", "Problem", "excess_loss",
    "generate",
]
