"""Config-driven experiments and the command-line interface."""

from .config import ConfigError, ExperimentConfig, WindowBlock, load_config
from .runner import OUTPUT_ENV, ResultRecord, build_ids, resolve_window, run

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "WindowBlock",
    "load_config",
    "OUTPUT_ENV",
    "ResultRecord",
    "build_ids",
    "resolve_window",
    "run",
]
