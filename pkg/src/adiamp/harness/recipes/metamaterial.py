"""Metamaterial experiments: fixed-left ramps and damped reciprocal transport."""
from __future__ import annotations

import math

import numpy as np

from ...dynamics import Schedule, SimulationConfig, integrate
from ...errors import ConfigError
from ...family import Path
from ...geometry import petermann
from ...models import (
    instability_threshold,
    metamaterial_complex_a_family,
    metamaterial_ramp_family,
    ramp_duration,
    zero_mode_index,
)
from ...spectral import eig_full
from ..config import number, numbers_list
from ..registry import Experiment, register
from ..results import ResultBundle, bound_check, close_check, flag_check, window_check


def _zero_mode_K(family, lam) -> float:
    system = eig_full(family(lam))
    return petermann(system[zero_mode_index(system)])


def _trajectory(res, power: float):
    """Time series plus the deviation from ``(K_t/K_0)**power`` along the run."""
    target = (res.petermann / res.petermann[0]) ** power
    dev = np.abs(res.ratio - target) / target
    return {
        "times": res.times,
        "ratio": res.ratio,
        "target": target,
        "deviation": dev,
        "fidelity": res.instantaneous_overlap,
        "adiabatic": res.adiabatic_flag.astype(float),
        "first_violation": res.first_violation(),
        "spectra": None if res.spectra is None else np.array(res.spectra),
    }


# ---------------------------------------------------------------- meta-fixed-left

FIXED_LEFT_DEFAULTS = {
    "sizes": [7, 9],
    "ratios": [0.5, 0.75],
    "b_prime": 1.0,
    "rates": [3e-2, 1e-2, 3e-3, 1e-3],
    "eps": [0.0, 0.8],
    "Gamma": 0.0,
    "final_tol": 0.05,
    "peak_size": 9,
    "peak_ratio": 0.5,
    "peak_order": 4,
    "n_records": 400,
}


def _validate_fixed_left(p):
    sizes = [int(number(n, "sizes")) for n in p["sizes"]]
    if not sizes or min(sizes) < 2:
        raise ConfigError("sizes must be integers >= 2")
    ratios = numbers_list(p["ratios"], "ratios")
    if not ratios or any(not 0 < r < 1 for r in ratios):
        raise ConfigError("ratios a'/b' must lie in (0, 1)")
    rates = numbers_list(p["rates"], "rates")
    if not rates or any(g <= 0 for g in rates):
        raise ConfigError("rates must be positive")
    lo, hi = numbers_list(p["eps"], "eps", 2)
    if not 0 <= lo < hi < 1:
        raise ConfigError("eps range must satisfy 0 <= lo < hi < 1")
    if p["b_prime"] <= 0 or p["Gamma"] < 0:
        raise ConfigError("need b' > 0 and Gamma >= 0")
    if p["peak_size"] not in sizes or p["peak_ratio"] not in ratios:
        raise ConfigError("peak_size/peak_ratio must be among sizes/ratios")


def _run_ramp(N, ratio, b_prime, rate, eps, Gamma, n_records):
    a_prime = ratio * b_prime
    fam = metamaterial_ramp_family(N, a_prime, b_prime, Gamma)
    T = ramp_duration(a_prime, b_prime, rate, tuple(eps))
    cfg = SimulationConfig(
        Schedule(Path.line([eps[0]], [eps[1]]), T), initial_band=zero_mode_index, n_records=n_records
    )
    out = _trajectory(integrate(fam, cfg), 1.0)
    out["T"] = T
    out["K_ratio_eig"] = _zero_mode_K(fam, [eps[1]]) / _zero_mode_K(fam, [eps[0]])
    return out


def _tasks_fixed_left(cfg):
    p = cfg.params
    eps = numbers_list(p["eps"], "eps", 2)
    tasks = []
    for N in p["sizes"]:
        for r in p["ratios"]:
            for g in p["rates"]:
                kw = dict(
                    N=int(N), ratio=float(r), b_prime=p["b_prime"], rate=float(g), eps=eps,
                    Gamma=p["Gamma"], n_records=p["n_records"],
                )
                tasks.append(((int(N), float(r), float(g)), _run_ramp, kw))
    return tasks


def _assemble_fixed_left(cfg, results):
    p = cfg.params
    b = ResultBundle(cfg)
    eps = numbers_list(p["eps"], "eps", 2)
    rates = sorted((float(g) for g in p["rates"]), reverse=True)
    for N in p["sizes"]:
        for r in p["ratios"]:
            tag = f"N={int(N)}/ratio={float(r):g}"
            b.scalars[f"instability_threshold/{tag}"] = instability_threshold(r, 1.0)
            worst = []
            for g in rates:
                run = results[(int(N), float(r), g)]
                predicted = run["K_ratio_eig"]
                final = float(run["ratio"][-1])
                worst.append(float(run["deviation"].max()))
                b.scalars[f"final/{tag}/rate={g:g}"] = final
                b.scalars[f"K_ratio/{tag}"] = predicted
                b.scalars[f"max_deviation/{tag}/rate={g:g}"] = worst[-1]
                t = run["times"]
                b.add_series(
                    f"ramp_N{int(N)}_ratio{float(r):g}_rate{g:g}",
                    ("t", "eps", "intensity_ratio", "K_ratio", "fidelity"),
                    np.column_stack([t, eps[0] + (eps[1] - eps[0]) * t / run["T"], run["ratio"],
                                     run["target"], run["fidelity"]]),
                )
            slow = results[(int(N), float(r), rates[-1])]
            b.checks.append(
                close_check(f"final vs K_T/K_0 {tag} at rate {rates[-1]:g}", float(slow["ratio"][-1]),
                            slow["K_ratio_eig"], p["final_tol"])
            )
            monotone = all(x >= y for x, y in zip(worst[:-1], worst[1:]))
            b.checks.append(
                flag_check(f"deviation shrinks monotonically with rate {tag}", monotone, worst[-1],
                           "max over the run of |I/I0 - K_t/K_0| / (K_t/K_0)")
            )
    peak_run = results[(int(p["peak_size"]), float(p["peak_ratio"]), rates[-1])]
    peak = float(peak_run["ratio"].max())
    b.scalars["peak_amplification"] = peak
    order = abs(math.log10(peak) - p["peak_order"])
    b.checks.append(
        bound_check(f"peak amplification N={p['peak_size']} within one decade of 1e{p['peak_order']}", order, 1.0)
    )
    return b


register(
    Experiment(
        "meta-fixed-left",
        "metamaterial with fixed left zero mode, nonreciprocity ramped at several rates",
        FIXED_LEFT_DEFAULTS,
        _validate_fixed_left,
        _tasks_fixed_left,
        _assemble_fixed_left,
    )
)


# ---------------------------------------------------------------- meta-reciprocal

RECIPROCAL_DEFAULTS = {
    "N": 7,
    "Gamma": 1.0,
    "b": 1.0,
    "amplitudes": [0.5, 0.6666666666666666],
    "durations": [20.0, 100.0],
    "shapes": ["straight", "circular"],
    "check_amplitude": 0.5,
    "check_duration": 100.0,
    "final_tol": 0.05,
    "agree_tol": 0.02,
    "flag_amplitude": 0.6666666666666666,
    "flag_duration": 20.0,
    "flag_shape": "circular",
    "flag_fraction": 0.49,
    "flag_window": 0.05,
    "growth_factor": 2.0,
    "n_records": 400,
}

SHAPES = ("straight", "circular")


def reciprocal_path(shape: str, a0: float) -> Path:
    """``a: a0 -> i a0`` in the ``(Re a, Im a)`` plane."""
    if shape == "straight":
        return Path.line([a0, 0.0], [0.0, a0])
    if shape == "circular":
        return Path.arc((0.0, 0.0), a0, 0.0, math.pi / 2)
    raise ConfigError(f"unknown path shape {shape!r}; expected one of {SHAPES}")


def _amplitudes(p) -> list[float]:
    return numbers_list(p["amplitudes"], "amplitudes")


def _validate_reciprocal(p):
    if p["N"] < 2 or p["b"] == 0 or p["Gamma"] < 0:
        raise ConfigError("need N >= 2, b != 0, Gamma >= 0")
    amps = _amplitudes(p)
    if not amps or any(a <= 0 for a in amps):
        raise ConfigError("amplitudes must be positive")
    durs = numbers_list(p["durations"], "durations")
    if not durs or any(T <= 0 for T in durs):
        raise ConfigError("durations must be positive")
    for s in p["shapes"]:
        reciprocal_path(s, 1.0)

    def member(a, T, s):
        return any(abs(a - x) < 1e-12 for x in amps) and T in durs and s in p["shapes"]

    if not all(member(p["check_amplitude"], p["check_duration"], s) for s in p["shapes"]):
        raise ConfigError("check_amplitude/check_duration must be part of the sweep")
    if not member(p["flag_amplitude"], p["flag_duration"], p["flag_shape"]):
        raise ConfigError("flag_amplitude/flag_duration/flag_shape must be part of the sweep")


def _run_transport(N, b, Gamma, a0, T, shape, n_records):
    fam = metamaterial_complex_a_family(N, b, Gamma)
    cfg = SimulationConfig(
        Schedule(reciprocal_path(shape, a0), T),
        initial_band=zero_mode_index,
        n_records=n_records,
        store_spectra=True,
    )
    return _trajectory(integrate(fam, cfg), 0.5)


def _key(a0, T, shape):
    return (round(float(a0), 12), float(T), shape)


def _tasks_reciprocal(cfg):
    p = cfg.params
    tasks = []
    for a0 in _amplitudes(p):
        for T in p["durations"]:
            for shape in p["shapes"]:
                kw = dict(N=p["N"], b=p["b"], Gamma=p["Gamma"], a0=a0, T=float(T), shape=shape,
                          n_records=p["n_records"])
                tasks.append((_key(a0, T, shape), _run_transport, kw))
    return tasks


def _assemble_reciprocal(cfg, results):
    p = cfg.params
    b = ResultBundle(cfg)
    for a0 in _amplitudes(p):
        for T in p["durations"]:
            for shape in p["shapes"]:
                run = results[_key(a0, T, shape)]
                tag = f"a0={a0:.6g}/T={float(T):g}/{shape}"
                b.scalars[f"final/{tag}"] = float(run["ratio"][-1])
                b.scalars[f"sqrt_K_ratio/{tag}"] = float(run["target"][-1])
                fv = run["first_violation"]
                b.scalars[f"flag_fraction/{tag}"] = None if fv is None else fv / float(T)
                name = f"a0{a0:.4g}_T{float(T):g}_{shape}"
                b.add_series(
                    f"intensity_{name}",
                    ("t", "intensity_ratio", "sqrt_K_ratio", "fidelity", "adiabatic"),
                    np.column_stack([run["times"], run["ratio"], run["target"], run["fidelity"],
                                     run["adiabatic"]]),
                )
                spec = run["spectra"]
                cols = ["t"] + [f"{part}_E{k}" for k in range(spec.shape[1]) for part in ("re", "im")]
                flat = np.empty((spec.shape[0], 2 * spec.shape[1]))
                flat[:, 0::2], flat[:, 1::2] = spec.real, spec.imag
                b.add_series(f"spectrum_{name}", cols, np.column_stack([run["times"], flat]))

    finals = {}
    for shape in p["shapes"]:
        run = results[_key(p["check_amplitude"], p["check_duration"], shape)]
        finals[shape] = float(run["ratio"][-1])
        b.checks.append(
            close_check(f"final vs sqrt(K_T/K_0) a0={p['check_amplitude']:g} T={p['check_duration']:g} {shape}",
                        finals[shape], float(run["target"][-1]), p["final_tol"])
        )
    vals = list(finals.values())
    spread = (max(vals) - min(vals)) / min(vals)
    b.checks.append(bound_check("path shapes agree", spread, p["agree_tol"]))

    run = results[_key(p["flag_amplitude"], p["flag_duration"], p["flag_shape"])]
    fv = run["first_violation"]
    if fv is None:
        b.checks.append(flag_check("adiabaticity flag turns false", False))
        return b
    frac = fv / float(p["flag_duration"])
    b.checks.append(
        window_check("flag time fraction", frac, p["flag_fraction"], p["flag_window"])
    )
    k = int(np.searchsorted(run["times"], fv))
    before = float(run["deviation"][:k].max()) if k else 0.0
    after = float(run["deviation"][k:].max())
    b.scalars["deviation_before_flag"] = before
    b.scalars["deviation_after_flag"] = after
    b.checks.append(
        flag_check("deviation grows after the flag turns false", after >= p["growth_factor"] * before,
                   after / before if before > 0 else float("inf"),
                   f"max deviation after / before, must reach {p['growth_factor']:g}")
    )
    return b


register(
    Experiment(
        "meta-reciprocal",
        "damped reciprocal metamaterial, a: a0 -> i a0 along straight and circular paths",
        RECIPROCAL_DEFAULTS,
        _validate_reciprocal,
        _tasks_reciprocal,
        _assemble_reciprocal,
    )
)
