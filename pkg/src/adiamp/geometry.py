"""Gauge-invariant geometry of a band of a non-Hermitian family.

Conventions
-----------
* The amplification integrand is ``Re Tr(P_L grad P_R) / Tr(P_L P_R)`` and the
  geometric factor is ``A_g = exp(-integral of integrand . dlambda)``; the
  integrand equals ``2 Im(A^LR - A^RR)``.
* Plaquette curvature ``Omega_ij`` is ``i`` times the sum of link logarithms
  (see :func:`_link_logs`) around a square traversed counterclockwise in the
  ``(i, j)`` plane, divided by its area.  The three-dimensional curl component ``k`` is the plane
  ``(k+1, k+2) mod 3`` (:data:`CURL_PLANES`).
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    AdiampError,
    BandSwap,
    BranchJump,
    DefectiveMatrix,
    NoConvergence,
    StencilBandSwap,
    ZeroOverlap,
)
from .family import HamiltonianFamily, Path, as_point
from .spectral import CONTINUITY, EigenPair, Selector, eig_full, follow

CURL_PLANES = ((1, 2), (2, 0), (0, 1))

Gauge = Callable[[np.ndarray, EigenPair], EigenPair]


@dataclass(frozen=True, eq=False)
class GeometrySample:
    point: np.ndarray
    petermann: float
    integrand: np.ndarray
    eigenvalue: complex
    imag_residual: float = 0.0


@dataclass(frozen=True, eq=False)
class CurvatureSample:
    point: np.ndarray
    plane: tuple
    omega_lr: complex
    omega_rr: complex
    h: float
    richardson_error: float | None = None

    @property
    def difference(self) -> complex:
        """``Omega^LR - Omega^RR``, the gauge-invariant combination."""
        return self.omega_lr - self.omega_rr


def petermann(pair: EigenPair) -> float:
    """``<L|L><R|R> / |<L|R>|^2``; 1 exactly when left and right are parallel."""
    ll = np.vdot(pair.left, pair.left).real
    rr = np.vdot(pair.right, pair.right).real
    lr = abs(np.vdot(pair.left, pair.right))
    if lr < 1e-14 * math.sqrt(ll * rr):
        raise ZeroOverlap("left and right eigenvectors are orthogonal")
    return float(ll * rr / lr**2)


def projector_overlap(left: np.ndarray, right: np.ndarray) -> complex:
    """``Tr(P_L P_R)`` for the rank-one projectors on ``left`` and ``right``."""
    a = np.vdot(left, right)
    return complex(a * np.conj(a) / (np.vdot(left, left).real * np.vdot(right, right).real))


def _pair_at(family, lam, selector, gauge: Gauge | None) -> EigenPair:
    pair = eig_full(family(lam)).select(selector)
    return gauge(lam, pair) if gauge else pair


def _system_at(family, lam, selector, gauge: Gauge | None):
    system = eig_full(family(lam))
    i = system.index(selector)
    pair = system[i]
    return system, i, (gauge(lam, pair) if gauge else pair)


def _follow_system(family, lam, right, gauge: Gauge | None, stencil: bool = False):
    system = eig_full(family(lam))
    try:
        i, _ = follow(system, right, CONTINUITY)
    except BandSwap as exc:
        if stencil:
            raise StencilBandSwap(str(exc)) from exc
        raise
    pair = system[i]
    return system, i, (gauge(lam, pair) if gauge else pair)


def _follow_at(family, lam, right, gauge: Gauge | None, stencil: bool = False) -> EigenPair:
    return _follow_system(family, lam, right, gauge, stencil)[2]


def _trace_ratio(left, right, d_right) -> complex:
    """``Tr(P_L dP_R) / Tr(P_L P_R)`` for orthogonal projectors, given ``dR``."""
    lr = np.vdot(left, right)
    num = np.vdot(left, d_right) * np.conj(lr) + lr * np.vdot(d_right, left)
    rr = np.vdot(right, right).real
    return num / (lr * np.conj(lr)).real - (np.vdot(d_right, right) + np.vdot(right, d_right)) / rr


def _directional_perturbative(family, lam, system, idx, center: EigenPair, direction, h) -> complex:
    """Trace ratio along ``direction`` with ``dR`` from first-order perturbation theory.

    ``dR = sum_m R_m <L_m|dH|R> / ((E - E_m) <L_m|R_m>)`` over the other pairs,
    where only ``dH`` is a central difference.  Eigenvectors enter at a single
    point, so independent rescalings cancel to rounding level.
    """
    dH = (family(lam + h * direction) - family(lam - h * direction)) / (2 * h)
    R = center.right
    v = dH @ R
    E = center.eigenvalue
    dR = np.zeros_like(R)
    for m, pm in enumerate(system):
        if m == idx:
            continue
        gap = E - pm.eigenvalue
        if abs(gap) <= system.gap_tol:
            raise DefectiveMatrix("tracked band is degenerate; its projector is not differentiable")
        dR += pm.right * (np.vdot(pm.left, v) / (gap * pm.overlap))
    return _trace_ratio(center.left, R, dR)


def _directional_stencil(family, lam, center: EigenPair, direction, h, gauge) -> complex:
    """``Tr(P_L (P_R(+h) - P_R(-h)) / 2h) / Tr(P_L P_R)`` along ``direction``."""
    plus = _follow_at(family, lam + h * direction, center.right, gauge, stencil=True)
    minus = _follow_at(family, lam - h * direction, center.right, gauge, stencil=True)
    num = projector_overlap(center.left, plus.right) - projector_overlap(center.left, minus.right)
    return num / (2 * h) / projector_overlap(center.left, center.right)


METHODS = ("perturbative", "stencil")


def _directional(family, lam, system, idx, center, direction, h, gauge, method) -> complex:
    if method == "perturbative":
        return _directional_perturbative(family, lam, system, idx, center, direction, h)
    if method == "stencil":
        return _directional_stencil(family, lam, center, direction, h, gauge)
    raise ValueError(f"method must be one of {METHODS}")


def geometric_integrand(
    family: HamiltonianFamily,
    lam,
    pair_selector: Selector,
    h: float = 1e-4,
    gauge: Gauge | None = None,
    method: str = "perturbative",
) -> GeometrySample:
    """Amplification integrand ``Re Tr(P_L grad P_R) / Tr(P_L P_R)`` at ``lam``.

    ``method="perturbative"`` (default) differentiates ``P_R`` analytically
    from the eigensystem at ``lam`` and a central difference of ``H``;
    ``method="stencil"`` takes central differences of ``P_R`` itself, which
    agrees to ``O(h^2)`` but amplifies eigenvector rounding by ``1/h``.
    """
    lam = as_point(lam, family.d)
    system, idx, center = _system_at(family, lam, pair_selector, gauge)
    values = np.empty(family.d, dtype=complex)
    for i in range(family.d):
        e = np.zeros(family.d)
        e[i] = 1.0
        values[i] = _directional(family, lam, system, idx, center, e, h, gauge, method)
    imag = float(np.max(np.abs(values.imag)))
    if imag > 1e-6:
        raise AdiampError(f"trace ratio has imaginary part {imag:.2e}")
    return GeometrySample(lam, petermann(center), values.real.copy(), center.eigenvalue, imag)


def _segments(path: Path) -> list[tuple[float, float]]:
    cuts = [0.0, *path.breakpoints().tolist(), 1.0]
    return list(zip(cuts[:-1], cuts[1:]))


@dataclass
class _SegmentIntegrator:
    """Nested trapezoid sums on ``[s0, s1]`` with band tracking between samples."""

    family: HamiltonianFamily
    path: Path
    s0: float
    s1: float
    h: float
    gauge: Gauge | None
    method: str = "perturbative"
    samples: dict = field(default_factory=dict)
    order: list = field(default_factory=list)

    def value(self, s: float, system, idx: int, pair: EigenPair) -> float:
        lam = self.path.position(s)
        # linear segments have constant tangent; sample it mid-segment to avoid corners
        t = self.path.tangent(s if self.path.kind == "arc" else 0.5 * (self.s0 + self.s1))
        speed = float(np.linalg.norm(t))
        g = _directional(self.family, lam, system, idx, pair, t / speed, self.h, self.gauge, self.method)
        return g.real * speed

    def add(self, s: float, system, idx: int, pair: EigenPair) -> None:
        bisect.insort(self.order, s)
        self.samples[s] = (pair, self.value(s, system, idx, pair))

    def evaluate(self, ss: np.ndarray) -> np.ndarray:
        out = np.empty(len(ss))
        for k, s in enumerate(ss):
            if s not in self.samples:
                left = self.order[bisect.bisect_left(self.order, s) - 1]
                ref = self.samples[left][0]
                self.add(s, *_follow_system(self.family, self.path.position(s), ref.right, self.gauge))
            out[k] = self.samples[s][1]
        return out


def _romberg(seg: _SegmentIntegrator, n0: int, max_intervals: int, tol: float):
    n = n0
    width = seg.s1 - seg.s0
    ss = seg.s0 + width * np.arange(n + 1) / n
    f = seg.evaluate(ss)
    trap = [width / n * (f.sum() - 0.5 * (f[0] + f[-1]))]
    table = [[trap[0]]]
    while n < max_intervals:
        n *= 2
        mids = seg.s0 + width * (np.arange(n // 2) + 0.5) * 2 / n
        fm = seg.evaluate(mids)
        trap.append(0.5 * trap[-1] + width / n * fm.sum())
        row = [trap[-1]]
        for k in range(1, min(len(table), 3) + 1):
            row.append(row[k - 1] + (row[k - 1] - table[-1][k - 1]) / (4**k - 1))
        table.append(row)
        if abs(row[-1] - table[-2][-1]) < tol and len(table) >= 3:
            return row[-1], n
    raise NoConvergence(f"line integral not converged with {max_intervals} intervals")


def log_amplification(
    family: HamiltonianFamily,
    path: Path,
    pair_selector: Selector,
    h: float = 1e-4,
    rel_tol: float = 1e-8,
    n_start: int = 32,
    max_intervals: int = 2**14,
    gauge: Gauge | None = None,
    method: str = "perturbative",
) -> tuple[float, int]:
    """``ln A_g`` along ``path`` and the finest interval count used."""
    system, idx, pair = _system_at(family, path.position(0.0), pair_selector, gauge)
    total, finest = 0.0, 0
    for s0, s1 in _segments(path):
        if s0 > 0.0:
            system, idx, pair = _follow_system(family, path.position(s0), pair.right, gauge)
        seg = _SegmentIntegrator(family, path, s0, s1, h, gauge, method)
        seg.add(s0, system, idx, pair)
        value, n = _romberg(seg, n_start, max_intervals, rel_tol)
        total += value
        finest = max(finest, n)
        pair = seg.samples[max(seg.samples)][0]
    return -total, finest


def amplification_line_integral(
    family: HamiltonianFamily,
    path: Path,
    pair_selector: Selector,
    h: float = 1e-4,
    rel_tol: float = 1e-8,
    max_intervals: int = 2**14,
    gauge: Gauge | None = None,
    method: str = "perturbative",
) -> float:
    """Geometric amplification factor ``A_g`` of ``path`` for the selected band.

    The trapezoid sums are refined by doubling (with Romberg extrapolation)
    until the exponent changes by less than ``rel_tol``.
    """
    value, _ = log_amplification(
        family, path, pair_selector, h=h, rel_tol=rel_tol, max_intervals=max_intervals, gauge=gauge,
        method=method,
    )
    return math.exp(value)


def _link_logs(lefts, rights, closed: bool, bra: str = "left") -> np.ndarray:
    """Reversal-antisymmetric link logarithms.

    Link ``k -> k+1`` carries ``(ln <X_k|R_k+1>/<X_k|R_k> - ln <X_k+1|R_k>/<X_k+1|R_k+1>) / 2``
    with ``X = L`` (``bra='left'``) or ``X = R``.  Each term alone is the
    one-sided link ratio; averaging the two directions turns the sum into a
    trapezoid rule for the connection, removing an O(1) bias of the
    one-sided product in plaquette curvatures.  On closed loops the sum is
    gauge invariant.
    """
    bras = lefts if bra == "left" else rights
    n = len(rights)
    stop = n if closed else n - 1
    logs = np.empty(stop, dtype=complex)
    for k in range(stop):
        m = (k + 1) % n
        fwd = np.log(np.vdot(bras[k], rights[m]) / np.vdot(bras[k], rights[k]))
        bwd = np.log(np.vdot(bras[m], rights[k]) / np.vdot(bras[m], rights[m]))
        logs[k] = 0.5 * (fwd - bwd)
    return logs


def _transport(rights: list[np.ndarray]) -> list[np.ndarray]:
    """Rephase ``R_k+1`` so that ``<R_k|R_k+1>`` is real positive (a pure gauge change)."""
    out = [rights[0]]
    for r in rights[1:]:
        z = np.vdot(out[-1], r)
        out.append(r * (abs(z) / z) if z != 0 else r)
    return out


def _loop_phase(lefts, rights, closed: bool, bra: str = "left") -> complex:
    rights = _transport(list(rights))
    if closed:
        # spread the holonomy evenly so no single link carries it all
        closing = np.vdot(rights[-1], rights[0])
        theta = np.angle(closing)
        n = len(rights)
        rights = [r * np.exp(1j * theta * k / n) for k, r in enumerate(rights)]
    logs = _link_logs(lefts, rights, closed, bra)
    worst = float(np.max(np.abs(logs.imag))) if len(logs) else 0.0
    if worst > math.pi / 2:
        raise BranchJump(f"link phase {worst:.3f} exceeds pi/2; refine the discretization")
    return complex(1j * logs.sum())


def _band_pairs(family, points, selector, gauge) -> list[EigenPair]:
    pairs = [_pair_at(family, points[0], selector, gauge)]
    for lam in points[1:]:
        pairs.append(_follow_at(family, lam, pairs[-1].right, gauge))
    return pairs


def berry_phase_links(
    family: HamiltonianFamily,
    path: Path,
    pair_selector: Selector,
    n: int | None = None,
    gauge: Gauge | None = None,
) -> complex:
    """Discrete left-right Berry phase ``i sum_k l_k`` with the symmetric link logs of
    :func:`_link_logs`, approximating the line integral of ``A^LR``.

    For a closed path the endpoint sample is replaced by the starting one, so
    the result is gauge invariant (real part modulo ``2 pi``).  For open paths
    the value depends on the endpoint gauges and is meaningful only with a
    fixed gauge.
    """
    points = path.sample(n)
    closed = path.is_closed
    if closed:
        points = points[:-1]
    pairs = _band_pairs(family, points, pair_selector, gauge)
    return _loop_phase([p.left for p in pairs], [p.right for p in pairs], closed)


def _plaquette(family, lam, plane, h, center, gauge):
    i, j = plane
    corners = []
    for di, dj in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
        p = lam.copy()
        p[i] += di * h
        p[j] += dj * h
        corners.append(_follow_at(family, p, center.right, gauge, stencil=True))
    lefts = [c.left for c in corners]
    rights = [c.right for c in corners]
    area = (2 * h) ** 2
    lr = _loop_phase(lefts, rights, closed=True, bra="left") / area
    rr = _loop_phase(lefts, rights, closed=True, bra="right") / area
    return lr, rr


def curvature_plaquette(
    family: HamiltonianFamily,
    lam,
    plane: tuple,
    h: float = 1e-3,
    pair_selector: Selector = 0,
    gauge: Gauge | None = None,
    richardson: bool = False,
) -> CurvatureSample:
    """Berry curvature components ``Omega^LR_ij`` and ``Omega^RR_ij`` at ``lam``.

    With ``richardson=True`` the estimate is repeated at ``h/2`` and the
    difference stored; it should shrink like ``h^2``.
    """
    lam = as_point(lam, family.d)
    i, j = plane
    if i == j:
        raise ValueError("plane needs two distinct coordinates")
    center = _pair_at(family, lam, pair_selector, gauge)
    lr, rr = _plaquette(family, lam, plane, h, center, gauge)
    err = None
    if richardson:
        lr2, _ = _plaquette(family, lam, plane, h / 2, center, gauge)
        err = abs(lr - lr2)
    return CurvatureSample(lam, (i, j), lr, rr, h, err)


def _perturbed_vectors(family, lam, system, idx, center: EigenPair, direction, h):
    """``(dR, dL)`` along ``direction``, each up to a multiple of ``R`` (``L``)."""
    dH = (family(lam + h * direction) - family(lam - h * direction)) / (2 * h)
    R, L, E = center.right, center.left, center.eigenvalue
    vr = dH @ R
    vl = dH.conj().T @ L
    dR = np.zeros_like(R)
    dL = np.zeros_like(L)
    for m, pm in enumerate(system):
        if m == idx:
            continue
        gap = E - pm.eigenvalue
        if abs(gap) <= system.gap_tol:
            raise DefectiveMatrix("tracked band is degenerate; its curvature is undefined")
        dR += pm.right * (np.vdot(pm.left, vr) / (gap * pm.overlap))
        dL += pm.left * (np.vdot(pm.right, vl) / (np.conj(gap) * np.conj(pm.overlap)))
    return dR, dL


def _two_form(bra, ket, d_bra, d_ket) -> complex:
    """``i (<d_i X|d_j R> - <d_j X|d_i R>)/<X|R>`` minus its gauge part."""
    n = np.vdot(bra, ket)
    first = np.vdot(d_bra[0], d_ket[1]) - np.vdot(d_bra[1], d_ket[0])
    second = np.vdot(d_bra[0], ket) * np.vdot(bra, d_ket[1]) - np.vdot(d_bra[1], ket) * np.vdot(bra, d_ket[0])
    return complex(1j * (first / n - second / n**2))


def berry_curvature(
    family: HamiltonianFamily,
    lam,
    plane: tuple,
    h: float = 1e-4,
    pair_selector: Selector = 0,
    gauge: Gauge | None = None,
) -> CurvatureSample:
    """``Omega^LR_ij`` and ``Omega^RR_ij`` from first-order perturbation theory.

    Same quantities as :func:`curvature_plaquette` (same orientation), but
    eigenvectors enter at ``lam`` only and ``dH`` is a central difference, so
    the result is gauge invariant to rounding and exact for families linear
    in ``lam``.
    """
    lam = as_point(lam, family.d)
    i, j = plane
    if i == j:
        raise ValueError("plane needs two distinct coordinates")
    system, idx, center = _system_at(family, lam, pair_selector, gauge)
    derivs = []
    for k in (i, j):
        e = np.zeros(family.d)
        e[k] = 1.0
        derivs.append(_perturbed_vectors(family, lam, system, idx, center, e, h))
    dR = [d[0] for d in derivs]
    dL = [d[1] for d in derivs]
    lr = _two_form(center.left, center.right, dL, dR)
    rr = _two_form(center.right, center.right, dR, dR)
    return CurvatureSample(lam, (i, j), lr, rr, h, None)


def curvature_vector(
    family, lam, h: float = 1e-3, pair_selector: Selector = 0, gauge=None, method: str = "plaquette"
):
    """Curl components ``(Omega_1, Omega_2, Omega_3)`` of a three-parameter family.

    Returns ``(omega_lr, omega_rr)`` as complex 3-vectors; ``method`` is
    ``"plaquette"`` or ``"perturbative"`` (:func:`berry_curvature`).
    """
    if family.d != 3:
        raise ValueError("curl components need a three-parameter family")
    if method == "plaquette":
        samples = [curvature_plaquette(family, lam, pl, h, pair_selector, gauge) for pl in CURL_PLANES]
    elif method == "perturbative":
        samples = [berry_curvature(family, lam, pl, h, pair_selector, gauge) for pl in CURL_PLANES]
    else:
        raise ValueError("method must be 'plaquette' or 'perturbative'")
    return (
        np.array([s.omega_lr for s in samples]),
        np.array([s.omega_rr for s in samples]),
    )


@dataclass(frozen=True, eq=False)
class CurvatureMap:
    samples: list
    errors: dict
    plane: tuple
    shape: tuple

    @property
    def max_abs_im_lr(self) -> float:
        return max((abs(s.omega_lr.imag) for s in self.samples), default=float("nan"))

    @property
    def max_abs_im_rr(self) -> float:
        return max((abs(s.omega_rr.imag) for s in self.samples), default=float("nan"))


def curvature_map(
    family: HamiltonianFamily,
    base,
    plane: tuple,
    ranges: tuple,
    shape: tuple = (21, 21),
    pair_selector: Selector = 0,
    h: float = 1e-3,
) -> CurvatureMap:
    """Plaquette curvature on a grid over a two-dimensional slice.

    ``ranges = ((lo_i, hi_i), (lo_j, hi_j))`` for the coordinates in ``plane``;
    remaining coordinates stay at ``base``.  Per-node failures are collected in
    ``errors`` keyed by grid index rather than raised.
    """
    base = as_point(base, family.d)
    i, j = plane
    xs = np.linspace(*ranges[0], shape[0])
    ys = np.linspace(*ranges[1], shape[1])
    samples, errors = [], {}
    for a, x in enumerate(xs):
        for b, y in enumerate(ys):
            p = base.copy()
            p[i], p[j] = x, y
            try:
                samples.append(curvature_plaquette(family, p, plane, h, pair_selector))
            except AdiampError as exc:
                errors[(a, b)] = f"{type(exc).__name__}: {exc}"
    return CurvatureMap(samples, errors, tuple(plane), tuple(shape))


def fix_gauge(v: np.ndarray, anchor: int | None = None) -> np.ndarray:
    """Unit norm with component ``anchor`` (default: the largest) real positive."""
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v))) if anchor is None else anchor
    return v * (abs(v[k]) / v[k])


def xi_term(
    family: HamiltonianFamily,
    lam,
    h: float = 1e-4,
    pair_selector: Selector = 0,
    relation: tuple | None = None,
    gauge: Gauge | None = None,
) -> np.ndarray:
    """Path-dependent remainder ``Xi`` of the amplification integrand (gauge dependent).

    Default convention: ``<R|R> = <L|L> = 1`` with the largest component of
    the central vector real positive (same anchor across the stencil).
    ``relation=(M, tag)`` instead sets ``L = M R`` (tag ``"A"``) or
    ``L = M R*`` (tag ``"B"``) after fixing ``R``.  ``gauge`` is applied last.
    """
    lam = as_point(lam, family.d)
    center = _pair_at(family, lam, pair_selector, None)
    ar = int(np.argmax(np.abs(center.right)))
    al = int(np.argmax(np.abs(center.left)))

    def fixed(p, pair):
        r = fix_gauge(pair.right, ar)
        if relation is None:
            l = fix_gauge(pair.left, al)
        else:
            M, tag = relation
            M = np.asarray(M, dtype=complex)
            l = M @ (r if tag == "A" else r.conj())
        out = EigenPair(pair.eigenvalue, r, l)
        return gauge(p, out) if gauge else out

    c = fixed(lam, center)
    xi = np.empty(family.d)
    for i in range(family.d):
        e = np.zeros(family.d)
        e[i] = h
        plus = fixed(lam + e, _follow_at(family, lam + e, center.right, None, stencil=True))
        minus = fixed(lam - e, _follow_at(family, lam - e, center.right, None, stencil=True))
        dR = (plus.right - minus.right) / (2 * h)
        dL = (plus.left - minus.left) / (2 * h)
        z = np.vdot(c.left, dR) / np.vdot(c.left, c.right) - np.vdot(c.right, dL) / np.vdot(c.right, c.left)
        xi[i] = z.real
    return xi
