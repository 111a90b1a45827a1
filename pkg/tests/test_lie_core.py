import numpy as np
import pytest

from einflag.errors import AntisymmetryViolation, DimensionMismatch, JacobiViolation, NotSubalgebra
from einflag.lie_core import (
    Subalgebra,
    casimir_invariants,
    closure,
    commutant,
    is_almost_semisimple,
    is_subalgebra,
    is_toral,
    killing_form,
    sup_subalgebra,
    validate_algebra,
)
from einflag.presets import load_preset


@pytest.fixture(scope="module")
def su2():
    return load_preset("su2").algebra


@pytest.fixture(scope="module")
def su3():
    return load_preset("su3_flag").algebra


def test_su2_killing_is_minus_two_identity(su2):
    np.testing.assert_allclose(killing_form(su2), -2 * np.eye(3), atol=1e-12)


def test_structure_constants_are_ad_invariant_for_q(su3):
    # Q = I is bi-invariant: every ad(x) is skew
    for i in range(su3.dim):
        A = su3.ad(np.eye(su3.dim)[i])
        np.testing.assert_allclose(A, -A.T, atol=1e-12)


def test_validate_rejects_broken_antisymmetry(su2):
    C = su2.structure.copy()
    C[0, 1, 2] += 1e-3
    with pytest.raises(AntisymmetryViolation):
        validate_algebra(C)


def test_validate_rejects_jacobi_failure():
    # a generic totally antisymmetric tensor in dimension 5 is not a Lie bracket
    rng = np.random.default_rng(0)
    C = rng.standard_normal((5, 5, 5))
    C = sum(np.sign(p) * C.transpose(p_) for p, p_ in [(1, (0, 1, 2)), (1, (1, 2, 0)), (1, (2, 0, 1)),
                                                      (-1, (1, 0, 2)), (-1, (0, 2, 1)), (-1, (2, 1, 0))])
    with pytest.raises(JacobiViolation):
        validate_algebra(C)


def test_span_requires_closure_and_shape(su2):
    with pytest.raises(NotSubalgebra):
        Subalgebra.span(su2, np.eye(3)[:, :2])
    with pytest.raises(DimensionMismatch):
        Subalgebra.span(su2, np.ones((4, 1)))


def test_closure_of_two_lines_is_everything(su2):
    assert closure(su2, np.eye(3)[:, :2]).dim == 3
    assert is_subalgebra(su2, np.eye(3)[:, [2]])


def test_sup_and_commutant_on_su2_cubed():
    cat = load_preset("su2_cubed").catalog
    s1, s2 = cat.items[0], cat.items[1]
    assert sup_subalgebra(s1, s2).same(cat.items[3])
    assert commutant(s1).same(s1)
    torus = load_preset("su2xsu2_toral").catalog
    assert commutant(torus.items[3]).dim == 0


def test_toral_and_almost_semisimple():
    cat = load_preset("su2modT_squared").catalog
    h = cat.h
    assert not is_toral(h, cat.items[0])
    assert is_almost_semisimple(h, cat.items[0])
    torus = load_preset("su2xsu2_toral").catalog
    assert is_toral(torus.h, torus.items[3])
    assert not is_almost_semisimple(torus.h, torus.items[3])


def test_casimir_profile_of_su2(su2):
    prof = casimir_invariants(su2.full())
    # the Casimir of su(2) in this normalization is 2·identity
    np.testing.assert_allclose(prof.c, [6.0, 12.0, 8.0], atol=1e-10)
    assert prof.commutant_dim == 3


def test_casimir_profile_is_rotation_invariant(su3):
    rng = np.random.default_rng(1)
    from einflag.operators import random_automorphism

    P = random_automorphism(su3, rng)
    k = load_preset("su3_flag").catalog.items[0]
    rotated = Subalgebra.span(su3, P @ k.basis)
    np.testing.assert_allclose(casimir_invariants(k).c, casimir_invariants(rotated).c, atol=1e-8)
