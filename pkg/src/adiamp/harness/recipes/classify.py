"""Symmetry classification and endpoint formulas checked against the line integral."""
from __future__ import annotations

import numpy as np

from ...classes import closed_form_Ag, similarity_check, verify_relation, canonical_tag
from ...errors import ConfigError
from ...family import HamiltonianFamily, Path
from ...geometry import amplification_line_integral
from ...models import (
    U_SYMMETRIZE,
    MetamaterialConfig,
    metamaterial_ramp_family,
    two_level_family,
    zero_mode_index,
    zero_mode_profiles,
)
from ...spectral import eig_full, largest_real, smallest_real
from ..config import complex_matrix, merge, number, numbers_list
from ..registry import Experiment, register
from ..results import ResultBundle, close_check, flag_check

MODELS = ("two-level", "metamaterial-fixed-left", "hermitian")
BANDS = {"largest_real": largest_real, "smallest_real": smallest_real, "zero": zero_mode_index}

CASE_DEFAULTS = {
    "name": "case",
    "model": "two-level",
    "model_params": {},
    "class": "B",
    "M": None,
    "P": None,
    "P_mode": "symmetric",
    "start": [0.0, 5.0, 1.0],
    "end": [0.0, 5.0, 3.0],
    "via": [[0.0, 5.8, 2.0]],
    "domain": [[0.0, 0.0], [4.5, 6.0], [0.5, 3.5]],
    "n_samples": 8,
    "band": "largest_real",
    "tol": 1e-6,
}

CLASSIFY_DEFAULTS = {
    "cases": [
        {"name": "two-level-reciprocal", "P": "U-dagger"},
        {
            "name": "metamaterial-fixed-left",
            "model": "metamaterial-fixed-left",
            "model_params": {"N": 7, "a_prime": 1.0, "b_prime": 2.0},
            "class": "A",
            "M": "left-projector",
            "start": [0.1],
            "end": [0.3],
            "via": [[0.4]],
            "domain": [[0.05, 0.45]],
            "band": "zero",
        },
        {
            "name": "identity-M",
            "model": "hermitian",
            "class": "A",
            "M": "identity",
            "start": [1.0, 0.5],
            "end": [-0.5, 1.0],
            "via": [[0.5, 1.5]],
            "domain": [[-1.0, 1.0], [0.5, 1.5]],
        },
    ]
}


def _hermitian_family() -> HamiltonianFamily:
    def H(p):
        return np.array([[p[0], p[1]], [p[1], -p[0]]], dtype=complex)

    return HamiltonianFamily(H, 2, 2, "real-symmetric")


def build_family(case) -> HamiltonianFamily:
    model, mp = case["model"], case["model_params"]
    if model == "two-level":
        if mp:
            raise ConfigError("two-level model takes no model_params")
        return two_level_family()
    if model == "hermitian":
        if mp:
            raise ConfigError("hermitian model takes no model_params")
        return _hermitian_family()
    mp = merge({"N": 7, "a_prime": 1.0, "b_prime": 2.0, "Gamma": 0.0}, mp, "model_params")
    return metamaterial_ramp_family(mp["N"], mp["a_prime"], mp["b_prime"], mp["Gamma"])


def _named_matrix(name, case, family):
    if name == "identity":
        return np.eye(family.dim, dtype=complex)
    if name == "U-dagger":
        return U_SYMMETRIZE.conj().T
    if name == "left-projector":
        if case["model"] != "metamaterial-fixed-left":
            raise ConfigError("left-projector needs the metamaterial-fixed-left model")
        mp = case["model_params"]
        cfg = MetamaterialConfig(mp["N"], mp["a_prime"], mp["b_prime"], mp["a_prime"], mp["b_prime"])
        _, left = zero_mode_profiles(cfg)
        left = left / np.linalg.norm(left)
        return np.outer(left, left.conj())
    raise ConfigError(f"unknown named matrix {name!r}")


def _matrix(value, case, family, where):
    if value is None:
        return None
    if isinstance(value, str):
        return _named_matrix(value, case, family)
    M = complex_matrix(value, where)
    if M.shape[0] != family.dim:
        raise ConfigError(f"{where}: expected {family.dim}x{family.dim}")
    return M


def _cases(p) -> list[dict]:
    out = []
    for k, c in enumerate(p["cases"]):
        if not isinstance(c, dict):
            raise ConfigError(f"cases[{k}] must be a mapping")
        c = merge(CASE_DEFAULTS, c, f"cases[{k}]")
        if c["model"] not in MODELS:
            raise ConfigError(f"cases[{k}].model must be one of {MODELS}")
        if c["model"] == "metamaterial-fixed-left":
            c["model_params"] = merge({"N": 7, "a_prime": 1.0, "b_prime": 2.0, "Gamma": 0.0},
                                      c["model_params"], f"cases[{k}].model_params")
        try:
            c["class"] = canonical_tag(c["class"])
        except ValueError as exc:
            raise ConfigError(f"cases[{k}]: {exc}") from None
        if c["band"] not in BANDS:
            raise ConfigError(f"cases[{k}].band must be one of {sorted(BANDS)}")
        if c["P_mode"] not in ("hermitian", "symmetric"):
            raise ConfigError(f"cases[{k}].P_mode must be 'hermitian' or 'symmetric'")
        if (c["M"] is None) == (c["P"] is None):
            raise ConfigError(f"cases[{k}]: give exactly one of M or P")
        fam = build_family(c)
        d = fam.d
        c["start"] = numbers_list(c["start"], f"cases[{k}].start", d)
        c["end"] = numbers_list(c["end"], f"cases[{k}].end", d)
        c["via"] = [numbers_list(v, f"cases[{k}].via", d) for v in c["via"]]
        c["domain"] = [numbers_list(r, f"cases[{k}].domain", 2) for r in c["domain"]]
        if len(c["domain"]) != d or c["n_samples"] < 3:
            raise ConfigError(f"cases[{k}]: domain needs {d} ranges and n_samples >= 3")
        c["n_samples"] = int(number(c["n_samples"]))
        out.append(c)
    return out


def _validate_classify(p):
    cases = _cases(p)
    names = [c["name"] for c in cases]
    if len(set(names)) != len(names):
        raise ConfigError("case names must be unique")
    for k, c in enumerate(cases):
        fam = build_family(c)
        _matrix(c["M"], c, fam, f"cases[{k}].M")
        _matrix(c["P"], c, fam, f"cases[{k}].P")


def _run_case(case, seed):
    fam = build_family(case)
    sel = BANDS[case["band"]]
    rng = np.random.default_rng(seed)
    lo, hi = np.array(case["domain"]).T
    samples = lo + (hi - lo) * rng.random((case["n_samples"], fam.d))
    out = {"similarity": None}
    if case["P"] is not None:
        P = _matrix(case["P"], case, fam, "P")
        sim = similarity_check(fam, P, case["P_mode"], samples)
        out["similarity"] = {"residual": sim.residual, "condition": sim.condition}
        M = sim.M
    else:
        M = _matrix(case["M"], case, fam, "M")
    rel = verify_relation(fam, M, case["class"], samples, sel)
    out["residual"] = rel.residual
    out["flags"] = rel.flags
    out["branch"] = rel.branch
    start = eig_full(fam(case["start"])).select(sel)
    end = eig_full(fam(case["end"])).select(sel)
    out["closed_form"] = closed_form_Ag(rel, start, end)
    out["line_integrals"] = {
        "direct": amplification_line_integral(fam, Path.line(case["start"], case["end"]), sel)
    }
    if case["via"]:
        path = Path.line(case["start"], *case["via"], case["end"])
        out["line_integrals"]["via"] = amplification_line_integral(fam, path, sel)
    return out


def _tasks_classify(cfg):
    return [
        (("case", c["name"]), _run_case, {"case": c, "seed": cfg.seed + k})
        for k, c in enumerate(_cases(cfg.params))
    ]


def _assemble_classify(cfg, results):
    b = ResultBundle(cfg)
    for c in _cases(cfg.params):
        name = c["name"]
        r = results[("case", name)]
        f = r["flags"]
        b.scalars[f"{name}/residual"] = r["residual"]
        b.scalars[f"{name}/branch"] = r["branch"]
        b.scalars[f"{name}/closed_form"] = r["closed_form"]
        for flag in ("hermitian", "symmetric", "unitary", "projector", "rank"):
            b.scalars[f"{name}/M/{flag}"] = getattr(f, flag)
        if r["similarity"] is not None:
            b.scalars[f"{name}/similarity_residual"] = r["similarity"]["residual"]
            b.scalars[f"{name}/similarity_condition"] = r["similarity"]["condition"]
        b.checks.append(flag_check(f"{name} relation {c['class']} verified", r["residual"] <= 1e-8,
                                   r["residual"]))
        for label, val in sorted(r["line_integrals"].items()):
            b.scalars[f"{name}/line_integral/{label}"] = val
            b.checks.append(close_check(f"{name} closed form vs line integral ({label})", r["closed_form"],
                                        val, c["tol"]))
    return b


register(
    Experiment(
        "classify",
        "symmetry relation verification and endpoint-only amplification factors",
        CLASSIFY_DEFAULTS,
        _validate_classify,
        _tasks_classify,
        _assemble_classify,
    )
)
