"""Non-Hermitian two-level model ``H = [[-D, J+d], [J-d, D]]`` with its closed forms.

Parameter order is ``(Delta, J, delta)`` throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, PTBroken
from ..family import HamiltonianFamily

#: fixed unitary bringing ``H(0, J, delta)`` to a complex symmetric matrix by ``U H U^dagger``
U_SYMMETRIZE = np.array([[1, -1j], [-1j, 1]], dtype=complex) / math.sqrt(2)


def two_level_matrix(Delta: float, J: float, delta: float) -> np.ndarray:
    return np.array([[-Delta, J + delta], [J - delta, Delta]], dtype=complex)


def two_level_family(bounds=None) -> HamiltonianFamily:
    return HamiltonianFamily(lambda p: two_level_matrix(*p), 2, 3, "two-level", bounds)


def pt_symmetric(Delta: float, J: float, delta: float) -> bool:
    """Both eigenvalues real (boundary included)."""
    return Delta**2 + J**2 - delta**2 >= 0


@dataclass(frozen=True)
class TwoLevelClosedForms:
    E: float
    R: np.ndarray
    L: np.ndarray
    K: float
    conn_diff: np.ndarray
    curv_diff: np.ndarray


def two_level_closed_forms(Delta: float, J: float, delta: float, band: int = +1) -> TwoLevelClosedForms:
    """Analytic eigenpair, Petermann factor, connection and curvature differences.

    ``band`` is +1 or -1.  ``conn_diff`` is ``A^LR - A^RR`` and ``curv_diff``
    is ``Omega^LR - Omega^RR``, both as complex 3-vectors over (Delta, J, delta).
    """
    if band not in (1, -1):
        raise ValueError("band must be +1 or -1")
    rad = Delta**2 + J**2 - delta**2
    if rad <= 0:
        raise PTBroken(f"Delta^2 + J^2 - delta^2 = {rad:g} <= 0")
    root = math.sqrt(rad)
    E = band * root
    R = np.array([-Delta + E, J - delta], dtype=complex)
    L = np.array([-Delta + E, J + delta], dtype=complex)
    s = Delta**2 + J**2
    K = s / rad
    conn = (1j * delta / 2) / (s * E**2) * np.array(
        [Delta * delta + J * E, J * delta - Delta * E, -s], dtype=complex
    )
    curv = band * 1j * np.array([Delta, J, delta], dtype=complex) / (2 * rad**1.5)
    return TwoLevelClosedForms(E, R, L, K, conn, curv)


def petermann_two_level(Delta: float, J: float, delta: float) -> float:
    rad = Delta**2 + J**2 - delta**2
    if rad <= 0:
        raise PTBroken(f"Delta^2 + J^2 - delta^2 = {rad:g} <= 0")
    return (Delta**2 + J**2) / rad


def two_level_Ag_along_delta(J: float, delta: float, Delta0: float, DeltaT: float, band: int = +1) -> float:
    """Closed-form ``A_g`` for a path varying only ``Delta`` at fixed ``J``, ``delta``.

    ``(1 -+ sqrt(1 - K_T/K_ref)) / (1 -+ sqrt(1 - K_0/K_ref))`` with ``K_ref`` the
    Petermann factor at ``Delta = 0``; the upper sign belongs to the + band.
    """
    if band not in (1, -1):
        raise ValueError("band must be +1 or -1")
    if J**2 <= delta**2:
        raise PTBroken("need J^2 > delta^2")
    if Delta0 == DeltaT:
        return 1.0
    K_ref = J**2 / (J**2 - delta**2)

    def factor(D):
        arg = 1.0 - petermann_two_level(D, J, delta) / K_ref
        if arg < -1e-12:
            raise DomainError(f"negative radicand {arg:g}")
        # sqrt(arg) = |Delta delta / (J E)|; the signed root continues the formula
        # to Delta delta / J < 0 (checked against quadrature)
        signed = math.copysign(math.sqrt(max(arg, 0.0)), D * delta * J)
        return 1.0 - band * signed

    return factor(DeltaT) / factor(Delta0)
