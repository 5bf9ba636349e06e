"""Experiment configuration: loading, defaults, validation and hashing."""
from __future__ import annotations

import copy
import hashlib
import json
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path as FsPath

import yaml

from ..errors import ConfigError

TOP_LEVEL_KEYS = {"experiment", "seed", "params"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def canonical(self) -> str:
        return json.dumps(
            {"experiment": self.experiment, "params": self.params, "seed": self.seed},
            sort_keys=True,
            separators=(",", ":"),
        )

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def read_document(path) -> dict:
    """Parse a YAML (or JSON, which YAML accepts) document into a mapping."""
    path = FsPath(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON ({exc})") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def _check_like(value, default, where: str):
    """Coarse type check of ``value`` against the shape of ``default``."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, numbers.Integral):
        v = number(value, where)
        if not v.is_integer():
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(v)
    if isinstance(default, numbers.Real):
        return number(value, where)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping, got {value!r}")
        # an empty default mapping is free-form; its owner validates it
        return merge(default, value, where) if default else copy.deepcopy(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return value
    return value


def merge(defaults: dict, given: dict, where: str = "params") -> dict:
    """Defaults overridden by ``given``; unknown keys are rejected."""
    out = copy.deepcopy(defaults)
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}; allowed {sorted(defaults)}")
    for key, value in given.items():
        out[key] = _check_like(value, defaults[key], f"{where}.{key}")
    return out


def number(value, where: str = "value") -> float:
    """A real number; strings such as ``"2/3"`` are read as exact fractions."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, numbers.Real):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigError(f"{where}: expected a number, got {value!r}")


def numbers_list(value, where: str, length: int | None = None) -> list[float]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{where}: expected a list of numbers")
    out = [number(v, f"{where}[{i}]") for i, v in enumerate(value)]
    if length is not None and len(out) != length:
        raise ConfigError(f"{where}: expected {length} numbers, got {len(out)}")
    return out


def as_complex(value, where: str = "value") -> complex:
    """``[re, im]`` pair or a real number."""
    if isinstance(value, (list, tuple)):
        re, im = numbers_list(value, where, 2)
        return complex(re, im)
    return complex(number(value, where))


def complex_matrix(value, where: str = "matrix"):
    import numpy as np

    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ConfigError(f"{where}: expected a list of rows")
    rows = [[as_complex(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(value)]
    if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
        raise ConfigError(f"{where}: matrix must be square")
    return np.array(rows, dtype=complex)


def build_config(experiment: str, doc: dict | None, defaults: dict, seed: int | None = None) -> ExperimentConfig:
    doc = {} if doc is None else dict(doc)
    unknown = sorted(set(doc) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}; allowed {sorted(TOP_LEVEL_KEYS)}")
    named = doc.get("experiment", experiment)
    if named != experiment:
        raise ConfigError(f"config is for experiment {named!r}, not {experiment!r}")
    params = doc.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be a mapping")
    merged = merge(defaults, params)
    s = doc.get("seed", 0) if seed is None else seed
    if isinstance(s, bool) or not isinstance(s, int):
        raise ConfigError(f"seed must be an integer, got {s!r}")
    return ExperimentConfig(experiment, merged, s)
