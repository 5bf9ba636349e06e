import numpy as np
import pytest

from adiamp import errors
from adiamp.classes import (
    canonical_tag,
    classify_matrix,
    closed_form_Ag,
    proportionality_residual,
    relation_residual,
    similarity_check,
    verify_relation,
)
from adiamp.geometry import amplification_line_integral
from adiamp.spectral import eig_full

import families
from conftest import make_gauge


def _relation(case):
    fam = case["family"]
    if "P" in case:
        M = similarity_check(fam, case["P"], case["mode"], case["samples"]).M
    else:
        M = case["M"]
    return verify_relation(fam, M, case["class"], case["samples"], case["selector"])


CASES = {
    "A-general": lambda: families.similarity_general(1, "hermitian"),
    "B-general": lambda: families.similarity_general(2, "symmetric"),
    "A'-projector": lambda: families.fixed_right(3),
    "B-unitary": families.two_level_reciprocal,
    "A-projector": families.metamaterial_fixed_left,
}

BRANCHES = {
    "A-general": "A/general",
    "B-general": "B/general",
    "A'-projector": "A'/projector",
    "B-unitary": "B/unitary",
    "A-projector": "A/projector",
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_closed_form_equals_line_integral(name):
    case = CASES[name]()
    rel = _relation(case)
    assert rel.verified, rel.residual
    assert rel.branch == BRANCHES[name]
    fam, sel = case["family"], case["selector"]
    values = []
    for path in case["paths"]:
        start = eig_full(fam(path.position(0.0))).select(sel)
        end = eig_full(fam(path.position(1.0))).select(sel)
        cf = closed_form_Ag(rel, start, end)
        li = amplification_line_integral(fam, path, sel)
        assert li == pytest.approx(cf, rel=1e-6)
        values.append(li)
    if name == "A'-projector":
        np.testing.assert_allclose(values, 1.0, atol=1e-12)


@pytest.mark.parametrize("name", sorted(CASES))
def test_closed_form_is_gauge_invariant(name):
    case = CASES[name]()
    rel = _relation(case)
    fam, sel = case["family"], case["selector"]
    path = case["paths"][0]
    start = eig_full(fam(path.position(0.0))).select(sel)
    end = eig_full(fam(path.position(1.0))).select(sel)
    g = make_gauge(9)
    a = closed_form_Ag(rel, start, end)
    b = closed_form_Ag(rel, g(None, start), g(None, end))
    assert abs(a - b) <= 1e-12 * a


def test_general_class_differs_from_petermann_ratio():
    # the weight factor matters: sqrt(K_T/K_0) alone is wrong for a generic M
    case = families.similarity_general(1, "hermitian")
    rel = _relation(case)
    fam, sel = case["family"], case["selector"]
    path = case["paths"][0]
    start = eig_full(fam(path.position(0.0))).select(sel)
    end = eig_full(fam(path.position(1.0))).select(sel)
    from adiamp.geometry import petermann

    naive = np.sqrt(petermann(end) / petermann(start))
    assert abs(closed_form_Ag(rel, start, end) / naive - 1) > 1e-4


def test_matrix_flags():
    f = classify_matrix(np.eye(3))
    assert f.hermitian and f.symmetric and f.unitary and f.projector and f.rank == 3
    v = np.array([1.0, 1j, 0.0]) / np.sqrt(2)
    f = classify_matrix(np.outer(v, v.conj()))
    assert f.hermitian and f.projector and not f.symmetric and f.rank == 1
    f = classify_matrix(np.array([[1, 2j], [2j, 1]]))
    assert f.symmetric and not f.hermitian
    with pytest.raises(ValueError):
        classify_matrix(np.ones((2, 3)))
    with pytest.raises(errors.NonFinite):
        classify_matrix([[np.inf]])


def test_tags():
    assert canonical_tag("A′") == "A'"
    assert canonical_tag("Bp") == "B'"
    with pytest.raises(ValueError):
        canonical_tag("C")


def test_proportionality_residual():
    v = np.array([1.0, 2.0j, -1.0])
    assert proportionality_residual(v, (2 - 3j) * v) < 1e-15
    assert proportionality_residual(v, np.array([1.0, 0.0, 0.0])) > 0.5
    assert proportionality_residual(v, np.zeros(3)) == 1.0


def test_wrong_relation_not_verified():
    case = families.two_level_reciprocal()
    fam = case["family"]
    rel = verify_relation(fam, np.eye(2), "A", case["samples"], case["selector"])
    assert not rel.verified
    start = eig_full(fam(case["samples"][0])).select(case["selector"])
    with pytest.raises(errors.UnsupportedBranch):
        closed_form_Ag(rel, start, start)
    pair = eig_full(fam([0.0, 5.0, 1.0])).select(case["selector"])
    assert relation_residual("B", case["M"], pair) < 1e-12


def test_branch_requirements():
    case = families.two_level_reciprocal()
    fam = case["family"]
    # a non-Hermitian M cannot carry class A
    M = np.array([[1.0, 1.0], [0.0, 1.0]])
    rel = verify_relation(fam, M, "A", case["samples"], case["selector"], tol=10.0)
    start = eig_full(fam(case["samples"][0])).select(case["selector"])
    with pytest.raises(errors.UnsupportedBranch):
        closed_form_Ag(rel, start, start)


def test_similarity_check_rejects():
    case = families.similarity_general(1, "hermitian")
    with pytest.raises(errors.NotSimilarityReducible):
        similarity_check(case["family"], np.eye(3), "hermitian", case["samples"])
    with pytest.raises(errors.IllConditioned):
        similarity_check(case["family"], np.diag([1.0, 1.0, 1e-14]), "hermitian", case["samples"])
    with pytest.raises(ValueError):
        similarity_check(case["family"], case["P"], "unitary", case["samples"])


def test_verify_needs_three_samples():
    case = families.two_level_reciprocal()
    with pytest.raises(ValueError):
        verify_relation(case["family"], case["M"], "B", case["samples"][:2], case["selector"])
