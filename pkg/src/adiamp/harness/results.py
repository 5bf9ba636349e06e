"""Result bundles: checks, scalar summaries and tabular series, plus their files."""
from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .config import ExperimentConfig

_dir_locks: dict[str, threading.Lock] = {}
_registry_lock = threading.Lock()


def rel_dev(measured: float, predicted: float) -> float:
    if predicted == 0:
        return abs(measured)
    return abs(measured - predicted) / abs(predicted)


@dataclass(frozen=True)
class Check:
    """One pass criterion; ``predicted`` is ``None`` for qualitative checks."""

    name: str
    measured: float
    predicted: float | None
    tol: float
    passed: bool
    note: str = ""

    @property
    def rel_dev(self) -> float | None:
        return None if self.predicted is None else rel_dev(self.measured, self.predicted)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": _clean(self.measured),
            "predicted": _clean(self.predicted),
            "rel_dev": _clean(self.rel_dev),
            "tol": self.tol,
            "pass": bool(self.passed),
            "note": self.note,
        }


def close_check(name: str, measured: float, predicted: float, tol: float, note: str = "") -> Check:
    """Pass iff the relative deviation is within ``tol``."""
    ok = math.isfinite(measured) and rel_dev(measured, predicted) <= tol
    return Check(name, float(measured), float(predicted), tol, ok, note)


def bound_check(name: str, measured: float, tol: float, note: str = "") -> Check:
    """Pass iff ``measured <= tol`` (no closed-form counterpart)."""
    return Check(name, float(measured), None, tol, bool(measured <= tol), note)


def window_check(name: str, measured: float, predicted: float, window: float) -> Check:
    """Pass iff ``|measured - predicted| <= window`` (absolute)."""
    return Check(name, float(measured), float(predicted), window,
                 bool(abs(measured - predicted) <= window), "absolute window")


def flag_check(name: str, ok: bool, measured: float = float("nan"), note: str = "") -> Check:
    return Check(name, float(measured), None, float("nan"), bool(ok), note)


@dataclass(frozen=True)
class Series:
    columns: tuple
    rows: np.ndarray


@dataclass(eq=False)
class ResultBundle:
    config: ExperimentConfig
    scalars: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add_series(self, name: str, columns, rows) -> None:
        self.series[name] = Series(tuple(columns), np.asarray(rows, dtype=float))

    def summary(self) -> dict:
        return {
            "experiment": self.config.experiment,
            "config_hash": self.config.hash,
            "seed": self.config.seed,
            "inputs": self.config.params,
            "scalars": {k: _clean(v) for k, v in sorted(self.scalars.items())},
            "checks": [c.as_dict() for c in self.checks],
            "diagnostics": list(self.diagnostics),
            "pass": self.passed,
        }


def _clean(v):
    """JSON-safe scalar: complex as ``[re, im]``, non-finite as strings."""
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (complex, np.complexfloating)):
        return [_clean(float(v.real)), _clean(float(v.imag))]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return str(v)


def _fmt(x: float) -> str:
    return repr(float(x))


def format_series(series: Series, config_hash: str) -> str:
    lines = [f"# config-hash: {config_hash}", ",".join(series.columns)]
    lines.extend(",".join(_fmt(x) for x in row) for row in series.rows)
    return "\n".join(lines) + "\n"


def _lock_for(path: FsPath) -> threading.Lock:
    key = str(path.resolve())
    with _registry_lock:
        return _dir_locks.setdefault(key, threading.Lock())


def write_bundle(bundle: ResultBundle, out_dir) -> list[FsPath]:
    """Write ``summary.json`` and one CSV per series; returns the paths written."""
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with _lock_for(out):
        for name in sorted(bundle.series):
            p = out / f"{name}.csv"
            p.write_text(format_series(bundle.series[name], bundle.config.hash))
            written.append(p)
        p = out / "summary.json"
        p.write_text(json.dumps(bundle.summary(), indent=2, sort_keys=True) + "\n")
        written.append(p)
    return written
