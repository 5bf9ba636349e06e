"""Nonreciprocal SSH-type robotic metamaterial.

``N`` oscillator positions ``x`` and ``N-1`` effective momenta ``p`` obey
``i d/dt (x, p) = H (x, p)`` with ``H = i [[0, Q], [-R, -Gamma I]]`` where
``R_nm = -a d_nm + b d_n,m-1`` and ``Q_nm = -a' d_nm + b' d_n-1,m``, so that
``d^2 x/dt^2 = -Q R x`` when ``Gamma = 0``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import GapUndefined, RankDeficient
from ..family import HamiltonianFamily


class Unbounded:
    """Infinite-size Petermann factor of the directionally unstable phase."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED"

    def __reduce__(self):
        return (Unbounded, ())


UNBOUNDED = Unbounded()


@dataclass(frozen=True)
class MetamaterialConfig:
    N: int
    a: complex
    b: complex
    a_prime: complex
    b_prime: complex
    Gamma: float = 0.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least two oscillators")
        if self.b == 0 or self.b_prime == 0:
            raise ValueError("b and b' must be nonzero")
        if self.Gamma < 0:
            raise ValueError("damping rate must be non-negative")

    @property
    def N_prime(self) -> int:
        return self.N - 1

    @property
    def dim(self) -> int:
        return 2 * self.N - 1

    @classmethod
    def from_nonreciprocity(cls, N, a_prime, b_prime, eps, Gamma=0.0) -> "MetamaterialConfig":
        """``a = a'(1 + eps)``, ``b = b'(1 - eps)``."""
        return cls(N, a_prime * (1 + eps), b_prime * (1 - eps), a_prime, b_prime, Gamma)

    @classmethod
    def reciprocal(cls, N, a, b, Gamma=0.0) -> "MetamaterialConfig":
        return cls(N, a, b, a, b, Gamma)


@dataclass(frozen=True, eq=False)
class MetamaterialMatrices:
    R: np.ndarray
    Q: np.ndarray
    H: np.ndarray


def coupling_matrices(cfg: MetamaterialConfig) -> tuple[np.ndarray, np.ndarray]:
    N = cfg.N
    n = np.arange(N - 1)
    R = np.zeros((N - 1, N), dtype=complex)
    Q = np.zeros((N, N - 1), dtype=complex)
    R[n, n] = -cfg.a
    R[n, n + 1] = cfg.b
    Q[n, n] = -cfg.a_prime
    Q[n + 1, n] = cfg.b_prime
    return R, Q


def assemble(R: np.ndarray, Q: np.ndarray, Gamma: float = 0.0) -> np.ndarray:
    N = Q.shape[0]
    H = np.zeros((2 * N - 1, 2 * N - 1), dtype=complex)
    H[:N, N:] = 1j * Q
    H[N:, :N] = -1j * R
    if Gamma:
        H[N:, N:] = -1j * Gamma * np.eye(N - 1)
    return H


def metamaterial_matrices(cfg: MetamaterialConfig) -> MetamaterialMatrices:
    """Coupling blocks and the (damped, if ``Gamma > 0``) effective Hamiltonian."""
    R, Q = coupling_matrices(cfg)
    return MetamaterialMatrices(R, Q, assemble(R, Q, cfg.Gamma))


def reciprocity_unitary(N: int) -> np.ndarray:
    """``diag(I_N, i I_N-1)``; maps a reciprocal ``H`` to a symmetric matrix by ``U H U^-1``."""
    return np.diag(np.r_[np.ones(N), 1j * np.ones(N - 1)])


@dataclass(frozen=True, eq=False)
class ZeroMode:
    right: np.ndarray
    left: np.ndarray
    gap: float | None
    xi: int
    eta: int
    eps: complex
    K_inf: float | Unbounded


def zero_mode_profiles(cfg: MetamaterialConfig) -> tuple[np.ndarray, np.ndarray]:
    """Analytic zero-mode right and left kets, momentum components zero.

    Positions are ``(a/b)^n`` (right) and, for the bra ``<L|``, ``(a'/b')^n``;
    the stored ket is the conjugate.  Site index ``n`` starts at 0.
    """
    n = np.arange(cfg.N)
    zeros = np.zeros(cfg.N - 1, dtype=complex)
    right = np.r_[(cfg.a / cfg.b) ** n, zeros]
    left = np.r_[np.conj((cfg.a_prime / cfg.b_prime) ** n), zeros]
    return right, left


def _sgn(x: float) -> int:
    return int(np.sign(x))


def metamaterial_zero_mode(cfg: MetamaterialConfig) -> ZeroMode:
    a, b, ap, bp = cfg.a, cfg.b, cfg.a_prime, cfg.b_prime
    right, left = zero_mode_profiles(cfg)
    prod = (abs(a) - abs(b)) * (abs(ap) - abs(bp))
    if prod < 0:
        warnings.warn(GapUndefined("(|a|-|b|)(|a'|-|b'|) < 0; no SSH gap"), stacklevel=2)
        gap = None
    else:
        gap = 2.0 * math.sqrt(prod)
    xi = _sgn(abs(b) ** 2 - abs(a) ** 2)
    eta = _sgn(abs(bp) ** 2 - abs(ap) ** 2)
    eps = (a * bp - b * ap) / (a * bp + b * ap)
    if xi * eta == 1:
        K_inf = abs(a * ap - b * bp) ** 2 / ((abs(a) ** 2 - abs(b) ** 2) * (abs(ap) ** 2 - abs(bp) ** 2))
    else:
        # xi eta = 0 (|a| = |b| or |a'| = |b'|) is marginal; its overlap also decays with N
        K_inf = UNBOUNDED
    return ZeroMode(right, left, gap, xi, eta, complex(eps), K_inf)


def K_inf_from_eps(ratio: complex, eps: float) -> float | Unbounded:
    """Infinite-chain Petermann factor in the ``(a'/b', eps)`` parametrization."""
    r = (1 - eps) / (1 + eps)
    cfg = MetamaterialConfig(2, ratio / r, 1.0, ratio, 1.0)
    return metamaterial_zero_mode(cfg).K_inf


def reciprocal_gap(a_prime, b_prime) -> float:
    """``Delta_0 = 2 ||a'| - |b'||``."""
    return 2.0 * abs(abs(a_prime) - abs(b_prime))


def instability_threshold(a_prime, b_prime) -> float:
    """Nonreciprocity at which ``xi eta`` flips to -1."""
    q = abs(a_prime / b_prime)
    return (1 - q) / (1 + q)


def metamaterial_ramp_family(N: int, a_prime, b_prime, Gamma: float = 0.0) -> HamiltonianFamily:
    """One-parameter family in the nonreciprocity ``eps`` with ``a'``, ``b'`` fixed."""
    _, Q = coupling_matrices(MetamaterialConfig(N, a_prime, b_prime, a_prime, b_prime))
    n = np.arange(N - 1)

    def H(p):
        eps = p[0]
        R = np.zeros((N - 1, N), dtype=complex)
        R[n, n] = -a_prime * (1 + eps)
        R[n, n + 1] = b_prime * (1 - eps)
        return assemble(R, Q, Gamma)

    return HamiltonianFamily(H, 2 * N - 1, 1, f"meta-ramp(N={N},a'={a_prime},b'={b_prime})", ((0.0, 1.0),))


def ramp_duration(a_prime, b_prime, gamma: float, eps_range=(0.0, 0.8)) -> float:
    """Total time ``T`` for ``eps(t) = eps_min + gamma Delta_0 t``."""
    if gamma <= 0:
        raise ValueError("rate must be positive")
    lo, hi = eps_range
    if not 0 <= lo < hi < 1:
        raise ValueError("eps range must lie in [0, 1)")
    return (hi - lo) / (gamma * reciprocal_gap(a_prime, b_prime))


def metamaterial_complex_a_family(N: int, b0: float, Gamma: float = 0.0) -> HamiltonianFamily:
    """Reciprocal family ``a = a' = lam_0 + i lam_1`` with ``b = b' = b0`` real."""
    if b0 == 0 or np.iscomplexobj(b0) and np.imag(b0) != 0:
        raise ValueError("b0 must be real and nonzero")
    n = np.arange(N - 1)

    def H(p):
        a = p[0] + 1j * p[1]
        R = np.zeros((N - 1, N), dtype=complex)
        R[n, n] = -a
        R[n, n + 1] = b0
        return assemble(R, R.T.copy(), Gamma)

    return HamiltonianFamily(H, 2 * N - 1, 2, f"meta-reciprocal(N={N},b={b0},G={Gamma})")


def left_inverse(Q: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose left inverse of a full-column-rank ``Q``."""
    Qi = np.linalg.pinv(Q)
    if np.linalg.norm(Qi @ Q - np.eye(Q.shape[1]), 2) > tol:
        raise RankDeficient("Q does not have full column rank")
    return Qi


def momentum_from_positions(cfg: MetamaterialConfig, x, dxdt) -> np.ndarray:
    """Effective momenta ``p = Q_left^-1 dx/dt`` (``x`` is accepted for symmetry of the API)."""
    _, Q = coupling_matrices(cfg)
    return left_inverse(Q) @ np.asarray(dxdt, dtype=complex)


def zero_mode_index(system) -> int:
    """Pair with the smallest ``|E|``."""
    return int(np.argmin(np.abs(system.eigenvalues)))
