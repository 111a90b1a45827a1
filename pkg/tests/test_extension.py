import numpy as np
import pytest

from einflag.errors import EmptyComplement, KappaZero, NotInVI, ValidationError, WitnessNotFound
from einflag.extension import (
    EpsilonConfig,
    JoinStructure,
    build_I_J,
    certified_eps,
    cover_check,
    in_X_eps,
    join_decompose,
    kappa,
    kappa_boundary_check,
    near_simplex_witness,
    retract_to_nontoral,
)
from einflag.lattice import close_under_sup, toral_ideal
from einflag.presets import load_preset


@pytest.fixture(scope="module")
def js():
    return JoinStructure(close_under_sup(load_preset("su2xsu2_toral").catalog))


def idx(cat, name):
    return next(i for i, it in enumerate(cat.items) if it.name == name)


@pytest.fixture(scope="module")
def parts(js):
    cat, sp = js.cat, js.space
    s1, t1 = idx(cat, "s1"), idx(cat, "t1")
    z = sp.sample_star(s1, np.random.default_rng(5), face_prob=0.0)
    return s1, t1, z, sp.chi(t1)


def test_I_and_J_shapes(js):
    cat = js.cat
    for f in js.I:
        assert f[0] not in js.ideal and all(i in js.ideal for i in f[1:])
    assert all(cat.g_index in f for f in js.J)
    assert (idx(cat, "s1"), idx(cat, "t1")) in js.I


def test_flag_manifold_I_has_only_singletons_and_g():
    cat = close_under_sup(load_preset("su3_flag").catalog)
    I, J = build_I_J(cat, toral_ideal(cat))
    assert sorted(I) == sorted((i,) for i in range(len(cat)))
    assert J == [(cat.g_index,)]


def test_empty_complement():
    cat = load_preset("su2xsu2_toral").catalog  # not closed, so g is absent
    with pytest.raises(EmptyComplement):
        build_I_J(cat, range(len(cat.items)))


def test_kappa_boundary_values(js, parts):
    s1, t1, z, chi_t = parts
    assert kappa(z, js) == pytest.approx(1.0, abs=1e-12)
    assert kappa(chi_t, js) == pytest.approx(0.0, abs=1e-12)
    worst, _ = kappa_boundary_check(js, samples=10)
    assert max(worst.values()) <= 1e-9


def test_constructed_join_point_recovers_kappa(js, parts):
    _, _, z, chi_t = parts
    jp = join_decompose(0.25 * z + 0.75 * chi_t, js)
    assert jp.kappa == pytest.approx(0.25, abs=1e-9)
    np.testing.assert_allclose(jp.A2, z, atol=1e-9)
    np.testing.assert_allclose(jp.A1, chi_t, atol=1e-9)
    assert jp.residual <= 1e-8


def test_x_eps_threshold_is_closed(js, parts):
    _, _, z, chi_t = parts
    cfg = EpsilonConfig(0.5, 2)
    on = cfg.threshold * z + (1 - cfg.threshold) * chi_t
    assert in_X_eps(on, cfg, js)
    assert in_X_eps(z, cfg, js)
    assert not in_X_eps(chi_t, cfg, js)
    assert not in_X_eps(np.eye(6) / 6, cfg, js)


def test_near_simplex_witness(js, parts):
    _, t1, z, chi_t = parts
    cfg = EpsilonConfig(0.1, 3)
    a0 = cfg.eps ** (cfg.L + 1)
    A = a0 * z + (1 - a0) * chi_t
    w = near_simplex_witness(A, cfg, js)
    assert w.distance < cfg.eps and w.flag[0] == t1
    with pytest.raises(WitnessNotFound):
        near_simplex_witness(cfg.eps ** (cfg.L / 2) * z + (1 - cfg.eps ** (cfg.L / 2)) * chi_t, cfg, js)


def test_retraction_endpoint(js, parts):
    _, _, z, chi_t = parts
    np.testing.assert_allclose(retract_to_nontoral(0.6 * z + 0.4 * chi_t, js), z, atol=1e-9)
    with pytest.raises(KappaZero):
        retract_to_nontoral(chi_t, js)


def test_not_in_VI(js):
    with pytest.raises(NotInVI):
        js.decompose(np.eye(6) / 6)


def test_epsilon_config():
    assert certified_eps(4) == pytest.approx(1 / 24)
    with pytest.raises(ValidationError):
        EpsilonConfig(1.5, 2)
    with pytest.raises(ValidationError):
        EpsilonConfig(0.1, 0)


def test_cover_on_small_presets(js):
    cfg = EpsilonConfig.default(js.cat)
    rep = cover_check(js, cfg, samples=80, seed=1)
    assert rep.uncovered == 0 and rep.samples == 80 and rep.certified
