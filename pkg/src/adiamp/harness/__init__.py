"""Experiment harness: configuration, recipes, result files and the command line."""
from .config import ExperimentConfig, build_config, read_document
from .registry import EXPERIMENTS, all_experiments, configure, execute, get, run, run_experiment
from .results import Check, ResultBundle, Series, format_series, write_bundle
