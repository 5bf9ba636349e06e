"""Symmetry relations between left and right eigenvectors and the endpoint formulas they imply.

Four relation classes, each with a fixed (parameter-independent) matrix ``M``:

====  ==================  ============
tag   relation            M must be
====  ==================  ============
A     ``L = M R``         Hermitian
B     ``L = M R*``        symmetric
A'    ``R = M L``         Hermitian
B'    ``R = M L*``        symmetric
====  ==================  ============

Whenever one holds, ``Im Omega^LR = 0`` and ``A_g`` depends only on the path
endpoints; :func:`closed_form_Ag` evaluates it from the endpoint eigenpairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IllConditioned, NonFinite, NotSimilarityReducible, UnsupportedBranch
from .geometry import petermann
from .spectral import EigenPair, Selector, eig_full

RELATION_TOL = 1e-8
FLAG_TOL = 1e-10

CLASS_TAGS = ("A", "B", "A'", "B'")
_ALIASES = {"A": "A", "B": "B", "A'": "A'", "B'": "B'", "A′": "A'", "B′": "B'", "Ap": "A'", "Bp": "B'"}


def canonical_tag(tag: str) -> str:
    try:
        return _ALIASES[tag]
    except KeyError:
        raise ValueError(f"unknown relation class {tag!r}; expected one of {CLASS_TAGS}") from None


@dataclass(frozen=True)
class MatrixFlags:
    hermitian: bool
    symmetric: bool
    unitary: bool
    projector: bool
    rank: int


def classify_matrix(M, tol: float = FLAG_TOL) -> MatrixFlags:
    """Structural flags of ``M``; tolerances are scaled by ``max(1, ||M||)``."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if not np.all(np.isfinite(M)):
        raise NonFinite("M has NaN or Inf entries")
    sv = np.linalg.svd(M, compute_uv=False)
    scale = max(1.0, float(sv[0]))
    eye = np.eye(M.shape[0])
    norm = np.linalg.norm
    return MatrixFlags(
        hermitian=bool(norm(M - M.conj().T, 2) <= tol * scale),
        symmetric=bool(norm(M - M.T, 2) <= tol * scale),
        unitary=bool(norm(M.conj().T @ M - eye, 2) <= tol * scale**2),
        projector=bool(norm(M @ M - M, 2) <= tol * scale**2),
        rank=int(np.sum(sv > tol * sv[0])) if sv[0] > 0 else 0,
    )


def _related(tag: str, M: np.ndarray, pair: EigenPair):
    """``(v, w)`` such that the relation reads ``v ∝ w``."""
    if tag == "A":
        return pair.left, M @ pair.right
    if tag == "B":
        return pair.left, M @ pair.right.conj()
    if tag == "A'":
        return pair.right, M @ pair.left
    return pair.right, M @ pair.left.conj()


def proportionality_residual(v: np.ndarray, w: np.ndarray) -> float:
    """``min_c ||v - c w|| / ||v||`` with ``c = <w|v>/<w|w>``."""
    ww = np.vdot(w, w).real
    if ww == 0.0:
        return 1.0
    c = np.vdot(w, v) / ww
    return float(np.linalg.norm(v - c * w) / np.linalg.norm(v))


@dataclass(frozen=True, eq=False)
class SymmetryRelation:
    class_tag: str
    M: np.ndarray
    flags: MatrixFlags
    residual: float
    tol: float = RELATION_TOL

    @property
    def verified(self) -> bool:
        return self.residual <= self.tol

    @property
    def branch(self) -> str:
        """Name of the closed-form branch, e.g. ``"B/unitary"``."""
        return f"{self.class_tag}/{_branch(self)}"


def relation_residual(tag: str, M, pair: EigenPair) -> float:
    return proportionality_residual(*_related(canonical_tag(tag), np.asarray(M, dtype=complex), pair))


def verify_relation(
    family,
    M,
    class_tag: str,
    sample_points,
    pair_selector: Selector,
    tol: float = RELATION_TOL,
) -> SymmetryRelation:
    """Check ``class_tag`` with matrix ``M`` at every sample point (max residual)."""
    tag = canonical_tag(class_tag)
    M = np.asarray(M, dtype=complex)
    points = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if len(points) < 3:
        raise ValueError("need at least three sample points")
    worst = 0.0
    for lam in points:
        pair = eig_full(family(lam)).select(pair_selector)
        worst = max(worst, proportionality_residual(*_related(tag, M, pair)))
    return SymmetryRelation(tag, M, classify_matrix(M), worst, tol)


@dataclass(frozen=True, eq=False)
class SimilarityResult:
    verified: bool
    M: np.ndarray
    residual: float
    condition: float
    mode: str


def similarity_check(family, P, mode: str, sample_points, tol: float = 1e-10) -> SimilarityResult:
    """Check that ``P^-1 H P`` is Hermitian (or symmetric) at every sample.

    Returns the implied relation matrix ``M = (P P^dagger)^-1`` (class A) or
    ``M = (P* P^dagger)^-1`` (class B).  Residuals are relative to ``||P^-1 H P||``.
    """
    if mode not in ("hermitian", "symmetric"):
        raise ValueError("mode must be 'hermitian' or 'symmetric'")
    P = np.asarray(P, dtype=complex)
    cond = float(np.linalg.cond(P))
    if not math.isfinite(cond) or cond > 1e12:
        raise IllConditioned(f"cond(P) = {cond:.3g}")
    Pinv = np.linalg.inv(P)
    worst = 0.0
    for lam in np.atleast_2d(np.asarray(sample_points, dtype=float)):
        G = Pinv @ family(lam) @ P
        other = G.conj().T if mode == "hermitian" else G.T
        scale = max(np.linalg.norm(G, 2), 1e-300)
        worst = max(worst, float(np.linalg.norm(G - other, 2) / scale))
    if worst > tol:
        raise NotSimilarityReducible(f"P^-1 H P is not {mode} (residual {worst:.3g})")
    M = np.linalg.inv(P @ P.conj().T) if mode == "hermitian" else np.linalg.inv(P.conj() @ P.conj().T)
    return SimilarityResult(True, M, worst, cond, mode)


def _branch(relation: SymmetryRelation) -> str:
    f = relation.flags
    if relation.class_tag in ("A", "A'"):
        if not f.hermitian:
            raise UnsupportedBranch(f"class {relation.class_tag} needs a Hermitian M")
        if f.unitary:
            return "unitary"
        if f.projector:
            return "projector"
        return "general"
    if not f.symmetric:
        raise UnsupportedBranch(f"class {relation.class_tag} needs a symmetric M")
    if f.unitary:
        return "unitary"
    if f.projector and f.hermitian:
        if f.rank != 1:
            raise UnsupportedBranch("endpoint formula for symmetric projectors is known only for rank one")
        return "projector"
    return "general"


def _sq(v) -> float:
    return float(np.vdot(v, v).real)


def closed_form_Ag(relation: SymmetryRelation, start: EigenPair, end: EigenPair) -> float:
    """Endpoint-only geometric amplification factor for a verified relation.

    Invariant under independent rescaling of the supplied eigenvectors.
    """
    if not relation.verified:
        raise UnsupportedBranch(
            f"relation {relation.class_tag} not verified (residual {relation.residual:.3g})"
        )
    branch = _branch(relation)
    ratio = petermann(end) / petermann(start)
    tag = relation.class_tag
    if branch == "unitary":
        return math.sqrt(ratio)
    if branch == "projector":
        return ratio if tag in ("A", "B") else 1.0
    M = relation.M
    if tag == "A":
        M2 = M @ M

        def w(p):
            return _sq(p.right) / np.vdot(p.right, M2 @ p.right).real
    elif tag == "A'":
        M2 = M @ M

        def w(p):
            return np.vdot(p.left, M2 @ p.left).real / _sq(p.left)
    elif tag == "B":

        def w(p):
            return _sq(p.right) / _sq(M @ p.right.conj())
    else:

        def w(p):
            return _sq(M @ p.left.conj()) / _sq(p.left)

    return math.sqrt(ratio * w(end) / w(start))
