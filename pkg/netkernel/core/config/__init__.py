from .base import ConfigManager, RuntimeSettings
from .experiment import (
    EXPERIMENT_NAMES,
    ExperimentConfig,
    RegularizerConfig,
    load_experiment_config,
    merge_defaults,
    parse_experiment_config,
    read_config_mapping,
)

config_manager = ConfigManager()
settings = config_manager.config

__all__ = [
    "EXPERIMENT_NAMES",
    "ConfigManager",
    "ExperimentConfig",
    "RegularizerConfig",
    "RuntimeSettings",
    "config_manager",
    "load_experiment_config",
    "merge_defaults",
    "parse_experiment_config",
    "read_config_mapping",
    "settings",
]
