"""Experiment runner: configuration, benchmarks, training and CSV reports."""

from .bench import EstimatorReport, run_variance_bench
from .config import ExperimentConfig, dump_config, load_config, loads_config
from .report import write_csv
from .training import TrainingResult, run_training

__all__ = [
    "EstimatorReport",
    "ExperimentConfig",
    "TrainingResult",
    "dump_config",
    "load_config",
    "loads_config",
    "run_training",
    "run_variance_bench",
    "write_csv",
]
