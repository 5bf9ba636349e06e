import math
import pickle

import numpy as np
import pytest

from adiamp import errors
from adiamp.geometry import petermann
from adiamp.models import (
    UNBOUNDED,
    U_SYMMETRIZE,
    K_inf_from_eps,
    MetamaterialConfig,
    coupling_matrices,
    instability_threshold,
    left_inverse,
    metamaterial_complex_a_family,
    metamaterial_matrices,
    metamaterial_ramp_family,
    metamaterial_zero_mode,
    momentum_from_positions,
    pt_symmetric,
    ramp_duration,
    reciprocal_gap,
    reciprocity_unitary,
    two_level_Ag_along_delta,
    two_level_closed_forms,
    two_level_matrix,
    zero_mode_index,
    zero_mode_profiles,
)
from adiamp.spectral import eig_full


# two-level model

@pytest.mark.parametrize("band", [1, -1])
def test_two_level_closed_eigenpair(band):
    p = (0.7, 5.0, 2.0)
    H = two_level_matrix(*p)
    cf = two_level_closed_forms(*p, band=band)
    np.testing.assert_allclose(H @ cf.R, cf.E * cf.R, atol=1e-12)
    np.testing.assert_allclose(H.conj().T @ cf.L, cf.E * cf.L, atol=1e-12)
    ll, rr = np.vdot(cf.L, cf.L).real, np.vdot(cf.R, cf.R).real
    assert cf.K == pytest.approx(ll * rr / abs(np.vdot(cf.L, cf.R)) ** 2, rel=1e-12)


def test_two_level_curvature_at_reference_point():
    cf = two_level_closed_forms(1.0, 5.0, 2.0)
    np.testing.assert_allclose(cf.curv_diff, 1j * np.array([1.0, 5.0, 2.0]) / (2 * 22**1.5))


def test_two_level_pt_region():
    assert pt_symmetric(0.0, 5.0, 3.0)
    assert not pt_symmetric(0.0, 1.0, 2.0)
    with pytest.raises(errors.PTBroken):
        two_level_closed_forms(0.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        two_level_closed_forms(0.0, 5.0, 1.0, band=2)


def test_symmetrizing_unitary():
    for p in [(0.0, 5.0, 1.0), (0.0, 2.0, -3.0)]:
        S = U_SYMMETRIZE @ two_level_matrix(*p) @ U_SYMMETRIZE.conj().T
        np.testing.assert_allclose(S, S.T, atol=1e-14)
    S = U_SYMMETRIZE @ two_level_matrix(1.0, 5.0, 1.0) @ U_SYMMETRIZE.conj().T
    assert np.linalg.norm(S - S.T) > 0.1


def test_along_delta_formula():
    assert two_level_Ag_along_delta(5.0, 3.0, 0.0, 4.0, 1) == pytest.approx(1 - math.sqrt(0.18))
    assert two_level_Ag_along_delta(5.0, 3.0, 0.0, 4.0, -1) == pytest.approx(1 + math.sqrt(0.18))
    assert two_level_Ag_along_delta(5.0, 3.0, 2.0, 2.0) == 1.0
    # composition along Delta
    a = two_level_Ag_along_delta(5.0, 3.0, -1.0, 1.5)
    b = two_level_Ag_along_delta(5.0, 3.0, 1.5, 3.0)
    assert a * b == pytest.approx(two_level_Ag_along_delta(5.0, 3.0, -1.0, 3.0))
    with pytest.raises(errors.PTBroken):
        two_level_Ag_along_delta(2.0, 3.0, 0.0, 1.0)


# metamaterial

def test_hamiltonian_reproduces_newton_equation():
    cfg = MetamaterialConfig(5, 0.7, 1.3, 0.4, 1.1)
    m = metamaterial_matrices(cfg)
    N = cfg.N
    H = m.H
    # i d/dt (x, p) = H (x, p) implies d^2x/dt^2 = -(H^2)_xx x restricted to x
    H2 = H @ H
    np.testing.assert_allclose(-H2[:N, :N], -m.Q @ m.R, atol=1e-14)
    assert H.shape == (cfg.dim, cfg.dim)


def test_damping_block():
    cfg = MetamaterialConfig(4, 1.0, 2.0, 1.0, 2.0, Gamma=0.5)
    H = metamaterial_matrices(cfg).H
    np.testing.assert_allclose(np.diag(H)[4:], -0.5j)
    with pytest.raises(ValueError):
        MetamaterialConfig(4, 1.0, 2.0, 1.0, 2.0, Gamma=-1.0)


@pytest.mark.parametrize("eps", [0.0, 0.1, 0.4])
def test_zero_mode_matches_profiles(eps):
    cfg = MetamaterialConfig.from_nonreciprocity(9, 1.0, 2.0, eps)
    s = eig_full(metamaterial_matrices(cfg).H)
    pair = s[zero_mode_index(s)]
    assert abs(pair.eigenvalue) < 1e-10
    right, left = zero_mode_profiles(cfg)
    for got, want in ((pair.right, right), (pair.left, left)):
        c = np.vdot(want, got) / np.vdot(want, want)
        np.testing.assert_allclose(got, c * want, atol=1e-10 * np.linalg.norm(got))


def test_stable_petermann_converges():
    zm = metamaterial_zero_mode(MetamaterialConfig.from_nonreciprocity(3, 1.0, 2.0, 0.1))
    assert zm.xi * zm.eta == 1
    assert zm.K_inf == pytest.approx(1.026272, abs=1e-6)
    for N in (20, 40):
        s = eig_full(metamaterial_matrices(MetamaterialConfig.from_nonreciprocity(N, 1.0, 2.0, 0.1)).H)
        assert petermann(s[zero_mode_index(s)]) == pytest.approx(zm.K_inf, rel=1e-6)


def test_unstable_petermann_grows():
    with pytest.warns(UserWarning):
        assert K_inf_from_eps(0.5, 0.8) is UNBOUNDED
    Ks = []
    for N in (10, 15, 20, 25):
        s = eig_full(metamaterial_matrices(MetamaterialConfig.from_nonreciprocity(N, 0.5, 1.0, 0.8)).H)
        Ks.append(petermann(s[zero_mode_index(s)]))
    assert all(b > 10 * a for a, b in zip(Ks, Ks[1:]))
    assert Ks[-1] > 1e3


def test_instability_threshold_and_gap():
    assert instability_threshold(1.0, 2.0) == pytest.approx(1 / 3)
    assert K_inf_from_eps(0.5, 0.3) != UNBOUNDED
    with pytest.warns(UserWarning):
        assert K_inf_from_eps(0.5, 0.4) is UNBOUNDED
    assert reciprocal_gap(1.0, 2.0) == 2.0
    zm = metamaterial_zero_mode(MetamaterialConfig(5, 1.0, 2.0, 1.0, 2.0))
    assert zm.gap == 2.0 and zm.eps == 0 and zm.K_inf == pytest.approx(1.0)


def test_unbounded_is_singleton():
    assert pickle.loads(pickle.dumps(UNBOUNDED)) is UNBOUNDED
    assert repr(UNBOUNDED) == "UNBOUNDED"


def test_ramp_family_and_duration():
    fam = metamaterial_ramp_family(5, 1.0, 2.0)
    cfg = MetamaterialConfig.from_nonreciprocity(5, 1.0, 2.0, 0.3)
    np.testing.assert_allclose(fam([0.3]), metamaterial_matrices(cfg).H)
    assert ramp_duration(1.0, 2.0, 0.01) == pytest.approx(0.8 / (0.01 * 2.0))
    with pytest.raises(ValueError):
        ramp_duration(1.0, 2.0, 0.0)
    with pytest.raises(ValueError):
        fam([1.5])


def test_complex_a_family_is_reciprocal():
    N = 5
    fam = metamaterial_complex_a_family(N, 1.0, Gamma=1.0)
    U = reciprocity_unitary(N)
    H = fam([0.3, 0.4])
    S = U @ H @ np.linalg.inv(U)
    np.testing.assert_allclose(S, S.T, atol=1e-14)
    with pytest.raises(ValueError):
        metamaterial_complex_a_family(N, 0.0)


def test_momentum_from_positions():
    cfg = MetamaterialConfig(4, 1.0, 2.0, 0.5, 1.5)
    _, Q = coupling_matrices(cfg)
    p = np.array([0.3, -1.0, 2.0])
    np.testing.assert_allclose(momentum_from_positions(cfg, None, Q @ p), p, atol=1e-12)
    with pytest.raises(errors.RankDeficient):
        left_inverse(np.zeros((3, 2)))
