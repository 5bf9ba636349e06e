"""``adiamp`` command line: run an experiment recipe and write its result files."""
from __future__ import annotations

import os
import sys
import time
from pathlib import Path

import click

from ..errors import AdiampError
from .config import read_document
from .registry import all_experiments, configure, get, run
from .results import write_bundle

OUT_ENV = "ADIAMP_OUT"
DEFAULT_ROOT = "adiamp-results"

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def default_out(experiment_id: str) -> Path:
    return Path(os.environ.get(OUT_ENV, DEFAULT_ROOT)) / experiment_id


def _list() -> None:
    for exp in all_experiments():
        click.echo(f"{exp.id:18s} {exp.description}")


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("experiment")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="YAML or JSON experiment config (defaults apply when omitted).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help=f"Output directory (default ${OUT_ENV}/<experiment>, else ./{DEFAULT_ROOT}/<experiment>).")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker processes for independent member runs.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
def main(experiment, config_path, out_dir, threads, seed):
    """Run EXPERIMENT (see `adiamp list`) and write summary.json plus CSV series.

    Exit status: 0 when every check passes, 1 on a check failure, 2 on a
    usage or configuration error.
    """
    if experiment == "list":
        _list()
        sys.exit(EXIT_PASS)
    try:
        get(experiment)
        doc = read_document(config_path) if config_path else None
        cfg = configure(experiment, doc, seed)
    except (KeyError, ValueError, AdiampError) as exc:
        click.echo(f"error: {exc.args[0] if exc.args else exc}", err=True)
        sys.exit(EXIT_USAGE)

    out = Path(out_dir) if out_dir else default_out(experiment)
    t0 = time.perf_counter()
    try:
        bundle = run(cfg, threads)
    except AdiampError as exc:
        click.echo(f"run failed: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_FAIL)
    write_bundle(bundle, out)
    for c in bundle.checks:
        click.echo(f"{'PASS' if c.passed else 'FAIL'}  {c.name}")
    click.echo(f"{experiment}: {'pass' if bundle.passed else 'FAIL'} "
               f"({time.perf_counter() - t0:.1f} s) -> {out}", err=True)
    sys.exit(EXIT_PASS if bundle.passed else EXIT_FAIL)


if __name__ == "__main__":
    main()
