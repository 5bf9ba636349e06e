"""Paired left/right eigendecomposition of non-Hermitian matrices.

Left eigenvectors are stored as kets ``|L>`` so that ``<L|H = E <L|`` reads
``H^dagger |L> = conj(E) |L>``.  No normalization is imposed on either side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import BandSwap, DefectiveMatrix, NonFinite, PairingAmbiguous

#: relative spectral-gap below which eigenvalues are treated as one cluster
GAP_TOL = 1e-8
#: minimum normalized overlap |<R_k|R_k+1>| accepted when following a band
CONTINUITY = 0.5

Selector = Union[int, float, complex, Callable[["EigenSystem"], int]]


def as_matrix(H) -> np.ndarray:
    """Validate and return ``H`` as a square complex array."""
    H = np.asarray(H, dtype=complex)
    if H.ndim == 0:
        H = H.reshape(1, 1)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise NonFinite("matrix has NaN or Inf entries")
    return H


@dataclass(frozen=True, eq=False)
class EigenPair:
    eigenvalue: complex
    right: np.ndarray
    left: np.ndarray
    biorth_residual: float = 0.0

    @property
    def overlap(self) -> complex:
        """``<L|R>``."""
        return complex(np.vdot(self.left, self.right))

    def rescaled(self, right_factor: complex = 1.0, left_factor: complex = 1.0) -> "EigenPair":
        return EigenPair(
            self.eigenvalue,
            self.right * right_factor,
            self.left * left_factor,
            self.biorth_residual,
        )


@dataclass(frozen=True, eq=False)
class EigenSystem:
    pairs: tuple
    min_gap: float
    biorth_residual: float
    norm: float
    gap_tol: float

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, i) -> EigenPair:
        return self.pairs[i]

    def __iter__(self):
        return iter(self.pairs)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.eigenvalue for p in self.pairs], dtype=complex)

    @property
    def imag_tol(self) -> float:
        """Tolerance for comparing imaginary parts (ties in the adiabatic test)."""
        return 1e-9 * max(self.norm, 1.0)

    def select(self, selector: Selector) -> EigenPair:
        return self.pairs[self.index(selector)]

    def index(self, selector: Selector) -> int:
        """Resolve a selector.

        Python ``int`` is a position in the sorted list, ``float``/``complex`` a
        target eigenvalue (nearest wins), a callable receives the system.
        """
        if callable(selector):
            return int(selector(self))
        if isinstance(selector, (bool, np.bool_)):
            raise TypeError("boolean is not a valid band selector")
        if isinstance(selector, (int, np.integer)):
            if not -len(self) <= selector < len(self):
                raise IndexError(f"band index {selector} out of range for dim {len(self)}")
            return int(selector) % len(self)
        return int(np.argmin(np.abs(self.eigenvalues - complex(selector))))

    def is_dominant(self, i: int) -> bool:
        """True when pair ``i`` has the largest imaginary part (ties allowed)."""
        ev = self.eigenvalues
        return bool(ev[i].imag >= ev.imag.max() - self.imag_tol)

    def residuals(self, H) -> tuple[float, float]:
        """Largest relative right and left eigen-equation residuals."""
        H = as_matrix(H)
        nH = max(self.norm, np.finfo(float).tiny)
        worst_r = worst_l = 0.0
        for p in self.pairs:
            r = np.linalg.norm(H @ p.right - p.eigenvalue * p.right)
            l = np.linalg.norm(H.conj().T @ p.left - np.conj(p.eigenvalue) * p.left)
            worst_r = max(worst_r, r / (nH * np.linalg.norm(p.right)))
            worst_l = max(worst_l, l / (nH * np.linalg.norm(p.left)))
        return worst_r, worst_l


def nearest(target: complex) -> Callable[[EigenSystem], int]:
    """Selector picking the eigenvalue closest to ``target``."""
    target = complex(target)
    return lambda system: int(np.argmin(np.abs(system.eigenvalues - target)))


def largest_real(system: EigenSystem) -> int:
    return int(np.argmax(system.eigenvalues.real))


def smallest_real(system: EigenSystem) -> int:
    return int(np.argmin(system.eigenvalues.real))


def normalized_overlaps(lefts: np.ndarray, rights: np.ndarray) -> np.ndarray:
    """Matrix ``|<L_i|R_j>| / (|L_i| |R_j|)`` for column-stacked vectors."""
    S = lefts.conj().T @ rights
    nl = np.linalg.norm(lefts, axis=0)
    nr = np.linalg.norm(rights, axis=0)
    return np.abs(S) / np.outer(nl, nr)


def _clusters(values: np.ndarray, tol: float) -> list[list[int]]:
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _greedy_match(E: np.ndarray, F: np.ndarray) -> np.ndarray:
    """``match[i] = j`` pairing E_i with F_j by repeatedly taking the closest pair."""
    n = len(E)
    D = np.abs(E[:, None] - F[None, :])
    order = np.lexsort((np.arange(n * n), D.ravel()))
    match = -np.ones(n, dtype=int)
    used = np.zeros(n, dtype=bool)
    for flat in order:
        i, j = divmod(int(flat), n)
        if match[i] < 0 and not used[j]:
            match[i] = j
            used[j] = True
    return match


def _sort_key(E: complex, tau: float):
    return (-round(E.imag / tau), E.real, E.imag)


def pair_left_right(
    rights,
    lefts,
    eigenvalues,
    left_eigenvalues,
    *,
    norm: float | None = None,
    gap_tol: float | None = None,
) -> EigenSystem:
    """Pair right and left eigenvectors into an :class:`EigenSystem`.

    ``rights[:, i]`` has eigenvalue ``eigenvalues[i]``; ``lefts[:, j]``
    satisfies ``<L_j|H = left_eigenvalues[j] <L_j|`` (i.e. the eigenvalues of
    ``H^dagger`` already conjugated).  Vectors are matched by nearest
    eigenvalue; clusters closer than ``gap_tol`` are biorthogonalized as a
    subspace.
    """
    R = np.atleast_2d(np.asarray(rights, dtype=complex))
    L = np.atleast_2d(np.asarray(lefts, dtype=complex))
    E = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
    F = np.atleast_1d(np.asarray(left_eigenvalues, dtype=complex))
    n = len(E)
    if not (len(F) == n and R.shape == (R.shape[0], n) and L.shape == R.shape):
        raise ValueError("rights, lefts and eigenvalue lists must have matching counts")
    if norm is None:
        norm = float(np.max(np.abs(E))) if n else 0.0
    if gap_tol is None:
        gap_tol = GAP_TOL * norm

    match = _greedy_match(E, F)
    groups = _clusters(E, gap_tol)

    # A near-tie between two crossing assignments means the pairing is arbitrary.
    for i in range(n):
        for k in range(i + 1, n):
            if abs(E[i] - E[k]) <= gap_tol:
                continue
            j, l = match[i], match[k]
            kept = abs(E[i] - F[j]) + abs(E[k] - F[l])
            swapped = abs(E[i] - F[l]) + abs(E[k] - F[j])
            if abs(swapped - kept) < 1e-12 and swapped <= kept:
                raise PairingAmbiguous(f"eigenvalues {E[i]} and {E[k]} cannot be told apart")

    values: list[complex] = []
    right_cols: list[np.ndarray] = []
    left_cols: list[np.ndarray] = []
    for group in groups:
        Rc = R[:, group]
        Lc = L[:, match[group]]
        if len(group) > 1:
            Rn = Rc / np.linalg.norm(Rc, axis=0)
            Ln = Lc / np.linalg.norm(Lc, axis=0)
            s = np.linalg.svd(Ln.conj().T @ Rn, compute_uv=False)
            sr = np.linalg.svd(Rn, compute_uv=False)
            sl = np.linalg.svd(Ln, compute_uv=False)
            # coalescing vectors make both Rn and Ln rank deficient
            if s[-1] < 1e-8 * s[0] or sr[-1] < 1e-8 * sr[0] or sl[-1] < 1e-8 * sl[0]:
                raise DefectiveMatrix(
                    f"eigenvalue cluster near {E[group[0]]:.3g} is not diagonalizable"
                )
            S = Lc.conj().T @ Rc
            Lc = Lc @ np.linalg.inv(S).conj().T
        for pos, idx in enumerate(group):
            values.append(E[idx])
            right_cols.append(Rc[:, pos])
            left_cols.append(Lc[:, pos])

    Rm = np.column_stack(right_cols)
    Lm = np.column_stack(left_cols)
    O = normalized_overlaps(Lm, Rm)
    diag = np.diag(O).copy()
    off = O.copy()
    np.fill_diagonal(off, 0.0)
    if n > 1:
        row_max = off.max(axis=1)
        col_max = off.max(axis=0)
        if np.any(diag <= np.maximum(row_max, col_max)):
            raise DefectiveMatrix("left/right pairing is not diagonally dominant (near exceptional point)")
        per_pair = np.maximum(row_max, col_max)
    else:
        per_pair = np.zeros(1)
    if np.any(diag == 0.0):
        raise DefectiveMatrix("vanishing <L|R> for a paired eigenvalue")

    tau = 1e-9 * max(norm, 1.0)
    order = sorted(range(n), key=lambda i: _sort_key(values[i], tau))
    pairs = tuple(
        EigenPair(complex(values[i]), Rm[:, i].copy(), Lm[:, i].copy(), float(per_pair[i]))
        for i in order
    )
    if n > 1:
        diffs = np.abs(E[:, None] - E[None, :])
        min_gap = float(diffs[np.triu_indices(n, 1)].min())
    else:
        min_gap = math.inf
    return EigenSystem(pairs, min_gap, float(off.max()) if n > 1 else 0.0, float(norm), float(gap_tol))


def eig_full(H, gap_tol: float | None = None) -> EigenSystem:
    """Complete eigendecomposition with paired left and right eigenvectors.

    Left vectors come from a separate decomposition of ``H^dagger`` rather
    than from inverting the right-eigenvector matrix, which would amplify
    exactly the non-orthogonality being measured.
    """
    H = as_matrix(H)
    norm = float(np.linalg.norm(H, 2))
    if gap_tol is None:
        gap_tol = GAP_TOL * norm
    E, R = np.linalg.eig(H)
    mu, L = np.linalg.eig(H.conj().T)
    return pair_left_right(R, L, E, np.conj(mu), norm=norm, gap_tol=gap_tol)


def follow(system: EigenSystem, previous_right: np.ndarray, threshold: float = CONTINUITY):
    """Index of the pair whose right vector best continues ``previous_right``.

    Returns ``(index, overlap)``; raises :class:`BandSwap` below ``threshold``.
    """
    prev = previous_right / np.linalg.norm(previous_right)
    best, best_ov = -1, -1.0
    for i, p in enumerate(system.pairs):
        ov = abs(np.vdot(prev, p.right)) / np.linalg.norm(p.right)
        if ov > best_ov:
            best, best_ov = i, ov
    if best_ov < threshold:
        raise BandSwap(f"band continuity lost (overlap {best_ov:.3f} < {threshold})")
    return best, float(best_ov)


@dataclass(frozen=True, eq=False)
class TrackedBand:
    points: np.ndarray
    pairs: tuple
    overlaps: tuple
    dominant: tuple
    spectra: tuple = field(repr=False, default=())

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.eigenvalue for p in self.pairs])

    @property
    def all_dominant(self) -> bool:
        return all(self.dominant)


def track_band(
    family,
    path,
    start_selector: Selector,
    n_steps: int | None = None,
    threshold: float = CONTINUITY,
    gap_tol: float | None = None,
) -> TrackedBand:
    """Follow one band along a discretized path by maximal eigenvector overlap.

    Each point also records whether the tracked eigenvalue has the largest
    imaginary part, the condition under which the state follows the band.
    """
    points = path.sample(n_steps)
    if len(points) < 2:
        raise ValueError("need at least two path points")
    pairs, overlaps, dominant, spectra = [], [], [], []
    prev = None
    for lam in points:
        system = eig_full(family(lam), gap_tol)
        if prev is None:
            i = system.index(start_selector)
        else:
            i, ov = follow(system, prev.right, threshold)
            overlaps.append(ov)
        prev = system[i]
        pairs.append(prev)
        dominant.append(system.is_dominant(i))
        spectra.append(system.eigenvalues)
    return TrackedBand(np.asarray(points), tuple(pairs), tuple(overlaps), tuple(dominant), tuple(spectra))


def random_phases(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random nonzero complex factors, used to probe gauge invariance."""
    return np.exp(rng.uniform(-1.0, 1.0, n) + 1j * rng.uniform(-np.pi, np.pi, n))
