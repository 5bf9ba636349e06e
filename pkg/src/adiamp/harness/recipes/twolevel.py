"""Two-level experiments: path independence, the Delta-only integral and curvature maps."""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from ...dynamics import Schedule, SimulationConfig, integrate
from ...errors import ConfigError, PTBroken
from ...family import Path
from ...geometry import amplification_line_integral, curvature_map, curvature_vector
from ...models import (
    petermann_two_level,
    two_level_Ag_along_delta,
    two_level_closed_forms,
    two_level_family,
)
from ...spectral import largest_real, smallest_real
from ..config import merge, numbers_list
from ..registry import Experiment, register
from ..results import ResultBundle, bound_check, close_check, flag_check

COORDS = {"Delta": 0, "J": 1, "delta": 2}


def band_selector(band: int):
    if band == 1:
        return largest_real
    if band == -1:
        return smallest_real
    raise ConfigError(f"band must be +1 or -1, got {band!r}")


def _run_dynamics(waypoints, T, band, n_records):
    fam = two_level_family()
    cfg = SimulationConfig(
        Schedule(Path.line(*waypoints), T), initial_band=band_selector(band), n_records=n_records
    )
    res = integrate(fam, cfg)
    return {
        "times": res.times,
        "ratio": res.ratio,
        "fidelity": res.instantaneous_overlap,
        "adiabatic": res.adiabatic_flag.astype(float),
        "petermann": res.petermann,
    }


def _run_line_integral(waypoints, band):
    return amplification_line_integral(two_level_family(), Path.line(*waypoints), band_selector(band))


def _dyn_series(bundle, name, run):
    K = run["petermann"]
    bundle.add_series(
        name,
        ("t", "intensity_ratio", "sqrt_K_ratio", "fidelity", "adiabatic"),
        np.column_stack([run["times"], run["ratio"], np.sqrt(K / K[0]), run["fidelity"], run["adiabatic"]]),
    )


# ---------------------------------------------------------------- twolevel-paths

PATHS_DEFAULTS = {
    "Delta": 0.0,
    "start": [1.0, 5.0],
    "end": [3.0, 5.0],
    "bends": [[2.0, 5.8], [2.0, 4.3]],
    "durations": [10.0, 100.0],
    "tolerances": [0.05, 0.01],
    "band": 1,
    "n_records": 400,
}


def _fig1_paths(p) -> dict:
    """Path name -> waypoints in (Delta, J, delta); plane points are given as (delta, J)."""
    D = p["Delta"]

    def lift(q):
        d, J = numbers_list(q, "point", 2)
        return [D, J, d]

    out = {"straight": [lift(p["start"]), lift(p["end"])]}
    for k, bend in enumerate(p["bends"], 1):
        out[f"bend{k}"] = [lift(p["start"]), lift(bend), lift(p["end"])]
    return out


def _check_pt_polyline(name, waypoints, samples: int = 400):
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        for s in np.linspace(0.0, 1.0, samples):
            D, J, d = (1 - s) * np.asarray(a) + s * np.asarray(b)
            if D * D + J * J - d * d <= 0:
                raise ConfigError(
                    f"path {name!r} leaves the PT-symmetric region at (Delta, J, delta) = "
                    f"({D:.4g}, {J:.4g}, {d:.4g})"
                )


def _validate_paths(p):
    band_selector(p["band"])
    if len(p["durations"]) != len(p["tolerances"]):
        raise ConfigError("durations and tolerances must have equal length")
    for T in numbers_list(p["durations"], "durations"):
        if T <= 0:
            raise ConfigError("durations must be positive")
    for name, wps in _fig1_paths(p).items():
        _check_pt_polyline(name, wps)


def _tasks_paths(cfg):
    p = cfg.params
    tasks = []
    for name, wps in _fig1_paths(p).items():
        tasks.append((("lint", name), _run_line_integral, {"waypoints": wps, "band": p["band"]}))
        for T in p["durations"]:
            kw = {"waypoints": wps, "T": float(T), "band": p["band"], "n_records": p["n_records"]}
            tasks.append((("dyn", name, float(T)), _run_dynamics, kw))
    return tasks


def _assemble_paths(cfg, results):
    p = cfg.params
    b = ResultBundle(cfg)
    paths = _fig1_paths(p)
    start, end = paths["straight"]
    predicted = math.sqrt(petermann_two_level(*end) / petermann_two_level(*start))
    b.scalars["predicted_sqrt_K_ratio"] = predicted
    for name in paths:
        Ag = results[("lint", name)]
        b.scalars[f"line_integral/{name}"] = Ag
        b.checks.append(close_check(f"line integral {name}", Ag, predicted, 1e-6))
    for T, tol in zip(p["durations"], p["tolerances"]):
        T = float(T)
        finals = {}
        for name in paths:
            run = results[("dyn", name, T)]
            finals[name] = float(run["ratio"][-1])
            b.scalars[f"final/{name}/T={T:g}"] = finals[name]
            _dyn_series(b, f"intensity_{name}_T{T:g}", run)
            b.checks.append(close_check(f"final {name} T={T:g}", finals[name], predicted, tol))
        spread = max(
            abs(finals[x] - finals[y]) / min(finals[x], finals[y]) for x, y in combinations(finals, 2)
        )
        b.scalars[f"pairwise_spread/T={T:g}"] = spread
        b.checks.append(bound_check(f"pairwise spread T={T:g}", spread, tol))
    return b


register(
    Experiment(
        "twolevel-paths",
        "two-level model, three paths with common endpoints in the PT-symmetric plane",
        PATHS_DEFAULTS,
        _validate_paths,
        _tasks_paths,
        _assemble_paths,
    )
)


# ---------------------------------------------------------------- twolevel-delta

DELTA_DEFAULTS = {
    "J": 5.0,
    "delta": 3.0,
    "Delta": [0.0, 4.0],
    "T": 300.0,
    "bands": [1, -1],
    "integral_tol": 1e-6,
    "dynamics_tol": 0.01,
    "n_records": 400,
}


def _validate_delta(p):
    J, d = p["J"], p["delta"]
    if J * J <= d * d:
        raise PTBroken(f"need J^2 > delta^2, got J={J}, delta={d}")
    numbers_list(p["Delta"], "Delta", 2)
    if p["T"] <= 0:
        raise ConfigError("T must be positive")
    for band in p["bands"]:
        band_selector(band)


def _delta_path(p):
    D0, D1 = numbers_list(p["Delta"], "Delta", 2)
    return [[D0, p["J"], p["delta"]], [D1, p["J"], p["delta"]]]


def _tasks_delta(cfg):
    p = cfg.params
    wps = _delta_path(p)
    tasks = []
    for band in p["bands"]:
        tasks.append((("lint", band), _run_line_integral, {"waypoints": wps, "band": band}))
        kw = {"waypoints": wps, "T": p["T"], "band": band, "n_records": p["n_records"]}
        tasks.append((("dyn", band), _run_dynamics, kw))
    return tasks


def _assemble_delta(cfg, results):
    p = cfg.params
    b = ResultBundle(cfg)
    D0, D1 = numbers_list(p["Delta"], "Delta", 2)
    for band in p["bands"]:
        tag = "+" if band == 1 else "-"
        analytic = two_level_Ag_along_delta(p["J"], p["delta"], D0, D1, band)
        Ag = results[("lint", band)]
        run = results[("dyn", band)]
        final = float(run["ratio"][-1])
        b.scalars[f"analytic/{tag}"] = analytic
        b.scalars[f"line_integral/{tag}"] = Ag
        b.scalars[f"dynamics/{tag}"] = final
        b.checks.append(close_check(f"line integral band {tag}", Ag, analytic, p["integral_tol"]))
        b.checks.append(close_check(f"dynamics band {tag}", final, analytic, p["dynamics_tol"]))
        _dyn_series(b, f"intensity_band{tag}", run)
    return b


register(
    Experiment(
        "twolevel-delta",
        "two-level model, Delta-only path: closed form vs line integral vs dynamics",
        DELTA_DEFAULTS,
        _validate_delta,
        _tasks_delta,
        _assemble_delta,
    )
)


# ---------------------------------------------------------------- curvature-map

SLICE_DEFAULTS = {
    "name": "slice",
    "base": [0.0, 5.0, 2.0],
    "plane": ["delta", "J"],
    "ranges": [[0.5, 3.5], [4.0, 6.0]],
    "shape": [21, 21],
    "expect": "zero",
    "tol": 1e-6,
}

CURVATURE_DEFAULTS = {
    "h": 1e-3,
    "band": 1,
    "slices": [
        {"name": "pt-plane"},
        {"name": "delta-one", "base": [1.0, 5.0, 2.0], "expect": "nonzero", "tol": 1e-3},
        {
            "name": "hermitian",
            "base": [0.0, 5.0, 0.0],
            "plane": ["Delta", "J"],
            "ranges": [[0.5, 3.0], [4.0, 6.0]],
            "tol": 1e-8,
        },
    ],
    "point": [1.0, 5.0, 2.0],
    "point_tol": 1e-4,
    "rr_tol": 1e-8,
}


def _slices(p) -> list[dict]:
    out = []
    for k, s in enumerate(p["slices"]):
        if not isinstance(s, dict):
            raise ConfigError(f"slices[{k}] must be a mapping")
        s = merge(SLICE_DEFAULTS, s, f"slices[{k}]")
        plane = s["plane"]
        if len(plane) != 2 or any(c not in COORDS for c in plane) or plane[0] == plane[1]:
            raise ConfigError(f"slices[{k}].plane must name two of {sorted(COORDS)}")
        if s["expect"] not in ("zero", "nonzero"):
            raise ConfigError(f"slices[{k}].expect must be 'zero' or 'nonzero'")
        s["base"] = numbers_list(s["base"], f"slices[{k}].base", 3)
        s["ranges"] = [numbers_list(r, f"slices[{k}].ranges", 2) for r in s["ranges"]]
        if len(s["ranges"]) != 2 or len(s["shape"]) != 2 or min(s["shape"]) < 1:
            raise ConfigError(f"slices[{k}]: two ranges and a positive 2-entry shape required")
        out.append(s)
    return out


def _validate_curvature(p):
    band_selector(p["band"])
    if not p["h"] > 0:
        raise ConfigError("h must be positive")
    numbers_list(p["point"], "point", 3)
    _slices(p)


def _run_slice(s, band, h):
    plane = tuple(COORDS[c] for c in s["plane"])
    cmap = curvature_map(
        two_level_family(), s["base"], plane, s["ranges"], tuple(s["shape"]), band_selector(band), h
    )
    rows = [
        (smp.point[plane[0]], smp.point[plane[1]], smp.omega_lr.real, smp.omega_lr.imag,
         smp.omega_rr.real, smp.omega_rr.imag)
        for smp in cmap.samples
    ]
    return {"rows": np.array(rows), "errors": dict(sorted(cmap.errors.items()))}


def _run_point(point, band, h):
    return curvature_vector(two_level_family(), point, h, band_selector(band))


def _tasks_curvature(cfg):
    p = cfg.params
    tasks = [(("point",), _run_point, {"point": numbers_list(p["point"], "point", 3), "band": p["band"], "h": p["h"]})]
    for s in _slices(p):
        tasks.append((("slice", s["name"]), _run_slice, {"s": s, "band": p["band"], "h": p["h"]}))
    return tasks


def _assemble_curvature(cfg, results):
    p = cfg.params
    b = ResultBundle(cfg)
    point = numbers_list(p["point"], "point", 3)
    lr, rr = results[("point",)]
    exact = two_level_closed_forms(*point, band=p["band"]).curv_diff
    diff = lr - rr
    for k, name in enumerate(("Delta", "J", "delta")):
        b.scalars[f"point/diff/{name}"] = complex(diff[k])
        b.scalars[f"point/exact/{name}"] = complex(exact[k])
        err = abs(diff[k] - exact[k])
        b.checks.append(bound_check(f"point curvature {name} component", err, p["point_tol"]))
    rr_max = float(np.max(np.abs(rr.imag)))
    for s in _slices(p):
        out = results[("slice", s["name"])]
        rows = out["rows"]
        for idx, msg in out["errors"].items():
            b.diagnostics.append(f"{s['name']} node {idx}: {msg}")
        b.add_series(
            f"curvature_{s['name']}",
            (s["plane"][0], s["plane"][1], "re_omega_lr", "im_omega_lr", "re_omega_rr", "im_omega_rr"),
            rows,
        )
        im_lr = float(np.max(np.abs(rows[:, 3]))) if len(rows) else float("nan")
        rr_max = max(rr_max, float(np.max(np.abs(rows[:, 5]))) if len(rows) else 0.0)
        b.scalars[f"max_abs_im_lr/{s['name']}"] = im_lr
        if s["expect"] == "zero":
            b.checks.append(bound_check(f"{s['name']} max |Im Omega_LR|", im_lr, s["tol"]))
        else:
            b.checks.append(
                flag_check(f"{s['name']} max |Im Omega_LR| > {s['tol']:g}", im_lr > s["tol"], im_lr)
            )
        b.checks.append(flag_check(f"{s['name']} all nodes evaluated", not out["errors"], len(out["errors"])))
    b.scalars["max_abs_im_rr"] = rr_max
    b.checks.append(bound_check("max |Im Omega_RR| over all samples", rr_max, p["rr_tol"]))
    return b


register(
    Experiment(
        "curvature-map",
        "two-level Berry curvature over parameter slices and at a reference point",
        CURVATURE_DEFAULTS,
        _validate_curvature,
        _tasks_curvature,
        _assemble_curvature,
    )
)
