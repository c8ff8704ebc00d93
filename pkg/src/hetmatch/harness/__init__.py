"""Graph I/O, noise injection, configuration and experiment runners."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config_text, resolve_config
from .experiments import (ExperimentRow, SummaryRow, derive_seed, run_experiment, summarize,
                          write_rows_csv, write_summary_csv)
from .graphio import GraphFormatError, inject_block_noise, load_graph, write_edge_list

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentRow",
    "GraphFormatError",
    "SummaryRow",
    "derive_seed",
    "inject_block_noise",
    "load_config",
    "load_graph",
    "parse_config_text",
    "resolve_config",
    "run_experiment",
    "summarize",
    "write_edge_list",
    "write_rows_csv",
    "write_summary_csv",
]
