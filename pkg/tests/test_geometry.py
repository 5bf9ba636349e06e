import math

import numpy as np
import pytest

from adiamp import errors
from adiamp.family import HamiltonianFamily, Path, rectangle
from adiamp.geometry import (
    amplification_line_integral,
    berry_curvature,
    berry_phase_links,
    curvature_map,
    curvature_plaquette,
    curvature_vector,
    geometric_integrand,
    log_amplification,
    petermann,
    xi_term,
)
from adiamp.models import (
    U_SYMMETRIZE,
    petermann_two_level,
    two_level_Ag_along_delta,
    two_level_closed_forms,
    two_level_family,
)
from adiamp.spectral import EigenPair, eig_full, largest_real, smallest_real

from conftest import make_gauge, random_matrix

FAM = two_level_family()
POINTS = [(0.0, 5.0, 1.0), (1.0, 5.0, 2.0), (0.3, 4.0, 1.5), (-2.0, 3.0, 2.5)]


def test_petermann_basic(rng):
    A = random_matrix(rng, 5)
    for p in eig_full(A + A.conj().T):
        assert petermann(p) == pytest.approx(1.0, abs=1e-12)
    for p in eig_full(A):
        assert petermann(p) >= 1.0
    with pytest.raises(errors.ZeroOverlap):
        petermann(EigenPair(0j, np.array([1.0, 0j]), np.array([0j, 1.0])))


@pytest.mark.parametrize("p", POINTS)
def test_petermann_two_level_closed_form(p):
    pair = eig_full(FAM(p)).select(largest_real)
    assert petermann(pair) == pytest.approx(petermann_two_level(*p), rel=1e-12)


@pytest.mark.parametrize("p", POINTS)
@pytest.mark.parametrize("band", [1, -1])
def test_integrand_matches_closed_connection(p, band):
    sel = largest_real if band == 1 else smallest_real
    got = geometric_integrand(FAM, p, sel).integrand
    want = 2 * two_level_closed_forms(*p, band=band).conn_diff.imag
    np.testing.assert_allclose(got, want, atol=1e-10)


@pytest.mark.parametrize("p", POINTS)
def test_stencil_and_perturbative_agree(p):
    a = geometric_integrand(FAM, p, largest_real).integrand
    b = geometric_integrand(FAM, p, largest_real, method="stencil").integrand
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_integrand_splits_into_petermann_gradient_and_xi():
    p = np.array([1.0, 5.0, 2.0])
    h = 1e-5
    lnK = [
        (math.log(petermann_two_level(*(p + h * e))) - math.log(petermann_two_level(*(p - h * e)))) / (2 * h)
        for e in np.eye(3)
    ]
    g = geometric_integrand(FAM, p, largest_real).integrand
    xi = xi_term(FAM, p, pair_selector=largest_real)
    np.testing.assert_allclose(g, xi - 0.5 * np.array(lnK), atol=1e-8)


def test_xi_vanishes_in_relation_gauge():
    # with L = M R* imposed, the remainder is zero on the PT-symmetric plane
    U = U_SYMMETRIZE
    M = U.conj().T @ U.conj()
    xi = xi_term(FAM, [0.0, 5.0, 2.0], pair_selector=largest_real, relation=(M, "B"))
    np.testing.assert_allclose(xi, 0.0, atol=1e-9)


# gauge invariance under independent random rescaling of L and R

@pytest.mark.parametrize("p", POINTS)
def test_gauge_invariance_integrand_and_petermann(p):
    gauge = make_gauge(7)
    a = geometric_integrand(FAM, p, largest_real)
    b = geometric_integrand(FAM, p, largest_real, gauge=gauge)
    assert np.max(np.abs(a.integrand - b.integrand)) <= 1e-12 * max(1.0, np.max(np.abs(a.integrand)))
    assert abs(a.petermann - b.petermann) <= 1e-12 * a.petermann


def test_gauge_invariance_line_integral():
    path = Path.line([0.5, 5.0, 1.0], [1.5, 4.5, 3.0])
    a = amplification_line_integral(FAM, path, largest_real)
    b = amplification_line_integral(FAM, path, largest_real, gauge=make_gauge(3))
    assert abs(a - b) <= 1e-12 * a


@pytest.mark.parametrize("p", POINTS)
def test_gauge_invariance_berry_curvature(p):
    gauge = make_gauge(11)
    for plane in ((1, 2), (2, 0), (0, 1)):
        a = berry_curvature(FAM, p, plane, pair_selector=largest_real)
        b = berry_curvature(FAM, p, plane, pair_selector=largest_real, gauge=gauge)
        scale = max(abs(a.omega_lr), abs(a.omega_rr), 1e-3)
        assert abs(a.omega_lr - b.omega_lr) <= 1e-12 * scale
        assert abs(a.omega_rr - b.omega_rr) <= 1e-12 * scale


def test_gauge_invariance_plaquette_to_its_rounding_floor():
    # link phases are differenced over an area (2h)^2, so eigenvector rounding
    # eps ~ 1e-16 shows up at ~eps / (2h)^2 relative; 1e-12 is out of reach
    p = (1.0, 5.0, 2.0)
    a = curvature_plaquette(FAM, p, (1, 2), pair_selector=largest_real)
    b = curvature_plaquette(FAM, p, (1, 2), pair_selector=largest_real, gauge=make_gauge(5))
    assert abs(a.omega_lr - b.omega_lr) <= 1e-7 * abs(a.omega_lr)
    assert abs(a.omega_rr - b.omega_rr) <= 1e-9


@pytest.mark.parametrize("p", POINTS)
@pytest.mark.parametrize("band", [1, -1])
def test_curvature_matches_closed_form(p, band):
    sel = largest_real if band == 1 else smallest_real
    want = two_level_closed_forms(*p, band=band).curv_diff
    lr, rr = curvature_vector(FAM, p, pair_selector=sel, method="perturbative")
    np.testing.assert_allclose(lr - rr, want, atol=1e-12)
    lr, rr = curvature_vector(FAM, p, pair_selector=sel)
    np.testing.assert_allclose(lr - rr, want, atol=1e-6)
    assert np.max(np.abs(rr.imag)) <= 1e-8


def test_plaquette_richardson_error_shrinks():
    s = curvature_plaquette(FAM, (1.0, 5.0, 2.0), (1, 2), h=1e-2, pair_selector=largest_real, richardson=True)
    s2 = curvature_plaquette(FAM, (1.0, 5.0, 2.0), (1, 2), h=5e-3, pair_selector=largest_real, richardson=True)
    assert s2.richardson_error < 0.4 * s.richardson_error


def test_curvature_map_pt_plane():
    cmap = curvature_map(FAM, [0.0, 5.0, 1.0], (1, 2), ((4.0, 6.0), (0.5, 3.5)), (5, 5), largest_real)
    assert not cmap.errors
    assert cmap.max_abs_im_lr <= 1e-6
    assert cmap.max_abs_im_rr <= 1e-8


def test_curvature_rejects_bad_input():
    with pytest.raises(ValueError):
        berry_curvature(FAM, (1.0, 5.0, 2.0), (1, 1))
    with pytest.raises(ValueError):
        curvature_vector(FAM.restricted([0, 5, 1], [1, 2]), [5.0, 1.0])
    with pytest.raises(ValueError):
        curvature_vector(FAM, (1.0, 5.0, 2.0), method="wilson")


def test_hermitian_loop_berry_phase_is_pi():
    # real symmetric 2x2 family; a loop around the degeneracy at the origin
    path = Path.arc((0.0, 0.0), 1.0, 0.0, 2 * math.pi, plane=(0, 1), base=[0.0, 0.0, 0.0], n_steps=400)
    phase = berry_phase_links(FAM, path, largest_real)
    assert abs(abs(phase.real) - math.pi) < 1e-6
    assert abs(phase.imag) < 1e-10
    again = berry_phase_links(FAM, path, largest_real, gauge=make_gauge(2))
    assert abs(np.exp(1j * phase.real) - np.exp(1j * again.real)) < 1e-9


def test_hermitian_family_has_unit_amplification():
    fam = HamiltonianFamily(lambda p: np.array([[p[0], p[1]], [p[1], -p[0]]], dtype=complex), 2, 2)
    path = Path.line([1.0, 0.5], [-0.5, 1.0], [0.2, 2.0])
    assert amplification_line_integral(fam, path, largest_real) == pytest.approx(1.0, abs=1e-12)


def test_pt_plane_path_independence():
    start, end = [0.0, 5.0, 1.0], [0.0, 5.0, 3.0]
    want = math.sqrt(petermann_two_level(*end) / petermann_two_level(*start))
    for path in (
        Path.line(start, end),
        Path.line(start, [0.0, 5.8, 2.0], end),
        Path.line(start, [0.0, 4.3, 2.0], end),
    ):
        assert amplification_line_integral(FAM, path, largest_real) == pytest.approx(want, rel=1e-8)


@pytest.mark.parametrize("band", [1, -1])
def test_delta_path_closed_form(band):
    sel = largest_real if band == 1 else smallest_real
    got = amplification_line_integral(FAM, Path.line([0.0, 5.0, 3.0], [4.0, 5.0, 3.0]), sel)
    assert got == pytest.approx(two_level_Ag_along_delta(5.0, 3.0, 0.0, 4.0, band), rel=1e-8)


def test_loop_amplification_equals_curvature_flux():
    # counterclockwise loop in (J, delta) at Delta = 1: ln A_g = -2 Im of the Omega^LR flux
    rect = rectangle((4.8, 1.8), 0.4, 0.4, plane=(1, 2), base=[1.0, 0.0, 0.0])
    lnA, _ = log_amplification(FAM, rect, largest_real)
    xs = np.linspace(4.8, 5.2, 21)
    ys = np.linspace(1.8, 2.2, 21)
    vals = np.array(
        [[berry_curvature(FAM, [1.0, a, b], (1, 2), pair_selector=largest_real).omega_lr for b in ys] for a in xs]
    )
    w = np.full(21, 1.0)
    w[0] = w[-1] = 0.5
    flux = (w @ vals @ w) * 0.02**2
    assert lnA == pytest.approx(-2 * flux.imag, rel=1e-4)
    assert abs(lnA) > 1e-3


def test_reversal_inverts_amplification():
    path = Path.line([1.0, 5.0, 1.0], [0.0, 4.5, 2.5])
    a = amplification_line_integral(FAM, path, largest_real)
    b = amplification_line_integral(FAM, path.reversed(), largest_real)
    assert a * b == pytest.approx(1.0, rel=1e-9)


def test_degenerate_band_rejected():
    fam = HamiltonianFamily(lambda p: np.diag([p[0], p[0], 2.0]).astype(complex), 3, 1)
    with pytest.raises(errors.DefectiveMatrix):
        geometric_integrand(fam, [0.5], 0)
