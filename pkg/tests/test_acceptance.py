"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import math
import sys
import time
from pathlib import Path as FsPath

import numpy as np
import pytest

sys.path.insert(0, str(FsPath(__file__).parent))

import families  # noqa: E402
from conftest import make_gauge, random_matrix  # noqa: E402

from adiamp.classes import closed_form_Ag, similarity_check, verify_relation  # noqa: E402
from adiamp.dynamics import Schedule, SimulationConfig, convergence_ratio, integrate, max_norm  # noqa: E402
from adiamp.family import HamiltonianFamily, Path  # noqa: E402
from adiamp.geometry import (  # noqa: E402
    amplification_line_integral,
    berry_curvature,
    geometric_integrand,
    petermann,
)
from adiamp.harness import run_experiment  # noqa: E402
from adiamp.models import (  # noqa: E402
    MetamaterialConfig,
    metamaterial_matrices,
    metamaterial_zero_mode,
    two_level_family,
    zero_mode_index,
)
from adiamp.spectral import eig_full, largest_real  # noqa: E402

_emit = print


def report(number, title, ok, detail, elapsed=None, limit=None):
    """Print the criterion line and return the overall verdict (runtime included)."""
    timing = ""
    if elapsed is not None:
        timing = f" [{elapsed:.1f} s" + (f" / limit {limit:g} s]" if limit else "]")
        if limit is not None and elapsed >= limit:
            ok = False
            detail += "; runtime limit exceeded"
    _emit(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}: {detail}{timing}")
    return ok


def _failed_checks(bundle):
    return [c.name for c in bundle.checks if not c.passed]


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def criterion_1():
    bundle, dt = _timed(lambda: run_experiment("twolevel-paths", {"params": {"durations": [100.0],
                                                                             "tolerances": [0.01]}}))
    target = math.sqrt(1.5)
    finals = {k.split("/")[1]: v for k, v in bundle.scalars.items() if k.startswith("final/")}
    worst = max(abs(v - target) / target for v in finals.values())
    ok = len(finals) == 3 and worst <= 0.01 and bundle.passed
    detail = ", ".join(f"{k}={v:.6f}" for k, v in sorted(finals.items()))
    return report(1, "path independence, three paths at T=100", ok,
                  f"{detail} vs {target:.6f} (worst {worst:.2e})", dt, 10)


def criterion_2():
    bundle, dt = _timed(lambda: run_experiment("twolevel-delta"))
    ok = bundle.passed
    parts = [f"{c.name}: dev {c.rel_dev:.1e}" for c in bundle.checks if c.predicted is not None]
    return report(2, "analytic A_g along Delta, both bands", ok, "; ".join(parts), dt, 30)


def criterion_3():
    bundle, dt = _timed(lambda: run_experiment("curvature-map"))
    s = bundle.scalars
    pt = s["max_abs_im_lr/pt-plane"]
    point_err = max(abs(v - s[k.replace("/diff/", "/exact/")]) for k, v in s.items() if k.startswith("point/diff/"))
    detail = (f"PT plane max|Im LR|={pt:.1e}, point max err={point_err:.1e}, "
              f"max|Im RR|={s['max_abs_im_rr']:.1e}")
    failed = _failed_checks(bundle)
    if failed:
        detail += f"; failed: {failed}"
    return report(3, "curvature condition", bundle.passed, detail, dt)


CLASS_CASES = {
    "A general": lambda: families.similarity_general(1, "hermitian"),
    "B general": lambda: families.similarity_general(2, "symmetric"),
    "B (two-level)": families.two_level_reciprocal,
    "A projector": families.metamaterial_fixed_left,
    "A' projector": lambda: families.fixed_right(3),
}


def criterion_4():
    t0 = time.perf_counter()
    worst, rows, ok = 0.0, [], True
    for name, build in CLASS_CASES.items():
        case = build()
        fam, sel = case["family"], case["selector"]
        M = (similarity_check(fam, case["P"], case["mode"], case["samples"]).M if "P" in case else case["M"])
        rel = verify_relation(fam, M, case["class"], case["samples"], sel)
        ok &= rel.verified
        for path in case["paths"]:
            start = eig_full(fam(path.position(0.0))).select(sel)
            end = eig_full(fam(path.position(1.0))).select(sel)
            cf = closed_form_Ag(rel, start, end)
            li = amplification_line_integral(fam, path, sel)
            dev = abs(li - cf) / cf
            worst = max(worst, dev)
            if name == "A' projector":
                ok &= abs(li - 1.0) <= 1e-6
        rows.append(f"{name} [{rel.branch}]")
    ok &= worst <= 1e-6
    return report(4, "closed forms vs line integral, two paths per class", ok,
                  f"{', '.join(rows)}; worst rel dev {worst:.1e}", time.perf_counter() - t0, 60)


def criterion_5():
    bundle, dt = _timed(lambda: run_experiment("meta-fixed-left", {"params": {"sizes": [7, 9],
                                                                              "ratios": [0.5]}}))
    s = bundle.scalars
    final = s["final/N=7/ratio=0.5/rate=0.001"]
    K = s["K_ratio/N=7/ratio=0.5"]
    detail = (f"N=7 final {final:.2f} vs K_T/K_0 {K:.2f} (dev {abs(final - K) / K:.1e}), "
              f"N=9 peak {s['peak_amplification']:.3g}")
    failed = _failed_checks(bundle)
    if failed:
        detail += f"; failed: {failed}"
    return report(5, "fixed-left metamaterial ramp", bundle.passed, detail, dt, 300)


def criterion_6():
    bundle, dt = _timed(lambda: run_experiment("meta-reciprocal"))
    s = bundle.scalars
    straight = s["final/a0=0.5/T=100/straight"]
    circular = s["final/a0=0.5/T=100/circular"]
    flag = s["flag_fraction/a0=0.666667/T=20/circular"]
    detail = (f"straight {straight:.4f}, circular {circular:.4f}, target {s['sqrt_K_ratio/a0=0.5/T=100/circular']:.4f}, "
              f"flag at {flag:.3f} T, growth x{s['deviation_after_flag'] / s['deviation_before_flag']:.1f}")
    failed = _failed_checks(bundle)
    if failed:
        detail += f"; failed: {failed}"
    return report(6, "damped reciprocal transport", bundle.passed, detail, dt, 300)


def criterion_7():
    t0 = time.perf_counter()
    fam = two_level_family()
    sched = Schedule(Path.line([0.5, 5.0, 1.0], [1.5, 5.0, 3.0]), 10.0)
    ratio = convergence_ratio(fam, SimulationConfig(sched, largest_real, dt=0.05 / max_norm(fam, sched)))

    rng = np.random.default_rng(7)
    A, B = random_matrix(rng, 6), random_matrix(rng, 6)
    herm = HamiltonianFamily(lambda p: (A + A.conj().T) + p[0] * (B + B.conj().T), 6, 1)
    res = integrate(herm, SimulationConfig(Schedule(Path.line([0.0], [1.0]), 20.0), track=False))
    drift = float(np.max(np.abs(res.ratio - 1)))

    biorth = 0.0
    for n in range(1, 41):
        for _ in range(2):
            biorth = max(biorth, eig_full(random_matrix(rng, n)).biorth_residual)

    gauge = make_gauge(21)
    gauge_dev = 0.0
    for p in ([0.0, 5.0, 1.0], [1.0, 5.0, 2.0], [0.3, 4.0, 1.5]):
        a = geometric_integrand(fam, p, largest_real)
        b = geometric_integrand(fam, p, largest_real, gauge=gauge)
        gauge_dev = max(gauge_dev, np.max(np.abs(a.integrand - b.integrand)) / np.max(np.abs(a.integrand)),
                        abs(a.petermann - b.petermann) / a.petermann)
        for plane in ((1, 2), (2, 0), (0, 1)):
            c = berry_curvature(fam, p, plane, pair_selector=largest_real)
            d = berry_curvature(fam, p, plane, pair_selector=largest_real, gauge=gauge)
            scale = max(abs(c.omega_lr), abs(c.omega_rr), 1e-3)
            gauge_dev = max(gauge_dev, abs(c.omega_lr - d.omega_lr) / scale, abs(c.omega_rr - d.omega_rr) / scale)
    path = Path.line([0.5, 5.0, 1.0], [1.5, 4.5, 3.0])
    a = amplification_line_integral(fam, path, largest_real)
    b = amplification_line_integral(fam, path, largest_real, gauge=gauge)
    gauge_dev = max(gauge_dev, abs(a - b) / a)

    ok = 8 <= ratio <= 32 and drift <= 1e-8 and biorth <= 1e-10 and gauge_dev <= 1e-12
    detail = (f"RK4 step-halving ratio {ratio:.2f}, Hermitian drift {drift:.1e}, "
              f"biorth residual {biorth:.1e}, gauge deviation {gauge_dev:.1e}")
    return report(7, "numerical hygiene", ok, detail, time.perf_counter() - t0)


def _zero_mode_K(cfg):
    s = eig_full(metamaterial_matrices(cfg).H)
    return petermann(s[zero_mode_index(s)])


def criterion_8():
    t0 = time.perf_counter()
    K_inf = metamaterial_zero_mode(MetamaterialConfig.from_nonreciprocity(3, 1.0, 2.0, 0.1)).K_inf
    stable = {N: _zero_mode_K(MetamaterialConfig.from_nonreciprocity(N, 1.0, 2.0, 0.1)) for N in (10, 20, 40)}
    unstable = {N: _zero_mode_K(MetamaterialConfig.from_nonreciprocity(N, 0.5, 1.0, 0.8)) for N in (5, 15, 25)}
    ok = (abs(K_inf - 1.026272) <= 1e-6 and abs(stable[40] - 1.026272) <= 0.01 * 1.026272
          and unstable[25] > 1e3)
    detail = (f"stable K(N=10,20,40) = {', '.join(f'{v:.6f}' for v in stable.values())} (K_inf {K_inf:.6f}); "
              f"unstable K(N=5,15,25) = {', '.join(f'{v:.3g}' for v in unstable.values())}")
    return report(8, "Petermann convergence", ok, detail, time.perf_counter() - t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 9)])
def test_criterion(criterion, capsys):
    global _emit
    with capsys.disabled():
        _emit = lambda line: print("\n" + line, flush=True)  # noqa: E731
        try:
            ok = criterion()
        finally:
            _emit = print
    assert ok


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
