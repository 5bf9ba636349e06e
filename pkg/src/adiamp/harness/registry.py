"""Experiment registry and the member-run executor."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

from .config import ExperimentConfig, build_config
from .results import ResultBundle

# a member run: (key, function, kwargs); functions must be module-level so they pickle
Task = tuple


@dataclass(frozen=True)
class Experiment:
    id: str
    description: str
    defaults: dict
    validate: Callable[[dict], None]
    tasks: Callable[[ExperimentConfig], list]
    assemble: Callable[[ExperimentConfig, dict], ResultBundle]


EXPERIMENTS: dict[str, Experiment] = {}


def register(exp: Experiment) -> Experiment:
    EXPERIMENTS[exp.id] = exp
    return exp


def get(experiment_id: str) -> Experiment:
    from . import recipes  # noqa: F401  (populates the registry)

    try:
        return EXPERIMENTS[experiment_id]
    except KeyError:
        raise KeyError(f"unknown experiment {experiment_id!r}; see `adiamp list`") from None


def all_experiments() -> list[Experiment]:
    from . import recipes  # noqa: F401

    return [EXPERIMENTS[k] for k in sorted(EXPERIMENTS)]


def _call(task):
    key, fn, kwargs = task
    return key, fn(**kwargs)


def execute(tasks: list, threads: int = 1) -> dict:
    """Run member tasks, concurrently when ``threads > 1``; results keyed by task key."""
    keys = [t[0] for t in tasks]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate task keys")
    if threads <= 1 or len(tasks) <= 1:
        pairs = [_call(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
            pairs = list(pool.map(_call, tasks))
    # merge in submission order so the outcome is independent of scheduling
    return dict(pairs)


def configure(experiment_id: str, doc: dict | None = None, seed: int | None = None) -> ExperimentConfig:
    exp = get(experiment_id)
    cfg = build_config(experiment_id, doc, exp.defaults, seed)
    exp.validate(cfg.params)
    return cfg


def run(cfg: ExperimentConfig, threads: int = 1) -> ResultBundle:
    exp = get(cfg.experiment)
    results = execute(exp.tasks(cfg), threads)
    return exp.assemble(cfg, results)


def run_experiment(experiment_id: str, doc: dict | None = None, seed: int | None = None, threads: int = 1):
    """Validate, run and assemble; the bundle is not written to disk."""
    return run(configure(experiment_id, doc, seed), threads)
