from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiment import (load_tables, pretrain, run_experiment, save_tables,
                         transfer_load)
from .sweeps import sweep_act_interval, sweep_comm_penalty, sweep_comm_reward

__all__ = [
    "ConfigError", "ExperimentConfig", "load_config", "parse_config",
    "load_tables", "pretrain", "run_experiment", "save_tables", "transfer_load",
    "sweep_act_interval", "sweep_comm_penalty", "sweep_comm_reward",
]
