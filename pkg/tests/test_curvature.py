import numpy as np
import pytest

from einflag.curvature import (
    MINUS_INF,
    PLUS_INF,
    HomogeneousSpace,
    InvariantMetric,
    asymptotic_check,
    einstein_search,
    expected_ray_class,
    flag_ray,
    isotropy_summands,
    make_ray,
    ray_expansion,
    s_of_k,
    sc_along_ray,
    evaluate_expansion,
    scalar_curvature,
    trichotomy_probe,
)
from einflag.errors import InvalidRay, NonConvergence, NotPositiveDefinite
from einflag.lattice import close_under_sup
from einflag.presets import PRESET_NAMES, load_preset


def space_of(name):
    return HomogeneousSpace.from_catalog(load_preset(name).catalog)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_normal_metric_matches_telescoping_endpoint(name):
    p = load_preset(name)
    space = space_of(name)
    assert space.scalar_curvature(np.eye(space.n)) == pytest.approx(s_of_k(p.algebra, p.h, p.algebra.full()), abs=1e-9)


def test_round_su2():
    space = space_of("su2")
    assert space.scalar_curvature(np.eye(3)) == pytest.approx(1.5, abs=1e-12)
    np.testing.assert_allclose(space.ricci(np.eye(3)), 0.5 * np.eye(3), atol=1e-12)
    assert space.einstein_residual(np.eye(3)) < 1e-12


@pytest.mark.parametrize("name", ["su3_flag", "su2_cubed", "su2modT_squared"])
def test_scaling_and_gradient(name):
    space = space_of(name)
    rng = np.random.default_rng(0)
    for _ in range(5):
        P = space.random_metric(rng)
        assert space.scalar_curvature(3.0 * P) == pytest.approx(space.scalar_curvature(P) / 3.0, rel=1e-12)
        r = space.einstein_residual(P)
        assert space.einstein_residual(InvariantMetric(P).normalized().op) == pytest.approx(r, abs=1e-12 * max(1, r))
        H = space.random_traceless_direction(P, rng)
        assert space.gradient_check(P, H)[0] <= 1e-6


def test_functional_wrappers_and_errors():
    p = load_preset("su2")
    assert scalar_curvature(p.algebra, p.h, InvariantMetric(np.eye(3))) == pytest.approx(1.5)
    with pytest.raises(NotPositiveDefinite):
        InvariantMetric(-np.eye(3))


def test_isotropy_summands_of_flag_manifold():
    p = load_preset("su3_flag")
    dec = isotropy_summands(p.algebra, p.h, p.catalog.generators)
    assert dec.dims == [2, 2, 2] and all(dec.irreducible)


def test_einstein_search_flag_manifold_finds_four_classes():
    res = einstein_search(space_of("su3_flag"), starts=10, seed=1)
    assert len(res.metrics) == 4
    assert all(m.residual < 1e-8 and m.sc > 0 for m in res.metrics)


def test_einstein_search_su2_converges_to_round():
    res = einstein_search(space_of("su2"), starts=6, seed=0)
    assert len(res.metrics) == 1
    np.testing.assert_allclose(res.metrics[0].op, np.eye(3), atol=1e-6)


def test_isotropy_irreducible_space_has_only_the_normal_metric():
    res = einstein_search(space_of("su2xsu2_diag"), starts=3)
    assert len(res.metrics) == 1 and "global minimum" in res.note
    np.testing.assert_allclose(res.metrics[0].op, np.eye(3), atol=1e-12)


def test_empty_budget():
    with pytest.raises(NonConvergence):
        einstein_search(space_of("su3_flag"), budget=0)


def test_ray_validation():
    space = space_of("su3_flag")
    with pytest.raises(InvalidRay):
        make_ray(space, np.eye(space.n) / np.sqrt(space.n))
    with pytest.raises(InvalidRay):
        make_ray(space, np.diag([1.0, -1, 0, 0, 0, 0]) / np.sqrt(2))  # splits a root plane


def test_flag_ray_grows_past_the_lower_bound():
    cat = close_under_sup(load_preset("su3_flag").catalog)
    space = HomogeneousSpace.from_catalog(cat)
    chain = [cat.items[0], cat.algebra.full()]
    ray, v = flag_ray(space, chain, v_hat=[0.0, 1.0])
    assert v[0] < 0 < v[1]
    rep = asymptotic_check(space, chain, ray, np.linspace(0, 10, 11))
    assert not rep.skipped and rep.worst_margin >= 0
    assert expected_ray_class(space, ray) == PLUS_INF
    verdict = trichotomy_probe(space, ray, expected=PLUS_INF)
    assert verdict.sc_confirm > 2 * space.scalar_curvature(np.eye(space.n))


def test_expansion_matches_direct_evaluation():
    space = space_of("su3_flag")
    rng = np.random.default_rng(4)
    V = sum(rng.normal() * E for E in space.equivariant_basis)
    V = V - np.trace(V) / space.n * np.eye(space.n)
    ray = make_ray(space, V / np.linalg.norm(V))
    exp = ray_expansion(space, ray)
    for t, direct in zip([0.0, 1.0, 3.0], sc_along_ray(space, ray, [0.0, 1.0, 3.0])):
        assert evaluate_expansion(exp, t) == pytest.approx(direct, rel=1e-9)
    if expected_ray_class(space, ray) == MINUS_INF:
        assert trichotomy_probe(space, ray).verdict == MINUS_INF
