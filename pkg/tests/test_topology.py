import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from einflag import topology
from einflag.errors import InconsistentEquivalence, ValidationError
from einflag.lattice import close_under_sup
from einflag.presets import load_preset


def closed(name):
    return close_under_sup(load_preset(name).catalog)


def test_flag_manifold_nontoral_complex_is_three_points():
    K = topology.nontoral_complex(closed("su3_flag"))
    assert len(K.vertices) == 3 and K.dimension == 0
    assert topology.reduced_homology(K) == [2]
    assert topology.reduced_homology(K, field="Z2") == [2]


def test_reference_complexes():
    assert topology.reduced_homology(topology.nontoral_complex(closed("su2modT_squared"))) == [1]
    assert topology.reduced_homology(topology.nontoral_complex(closed("su2_cubed"))) == [0, 1]
    assert topology.reduced_homology(topology.nontoral_complex(closed("example_2_8_p2"))) == [2, 0]


def test_empty_complex_counts_as_sphere_of_dimension_minus_one():
    K = topology.nontoral_complex(closed("su2"))
    assert K.is_empty and topology.reduced_homology(K) == []
    assert not topology.is_acyclic(topology.reduced_homology(K))


def test_cone_certificate():
    cat = closed("su2xsu2_toral")
    assert cat.items[topology.cone_certificate(cat)].name == "s1+t2"
    assert topology.cone_certificate(closed("su3_flag")) is None


@pytest.mark.parametrize("p,q", [(2, 2), (2, 3), (3, 3), (2, 4)])
def test_join_of_spheres_matches_kunneth(p, q):
    A, B = topology.sphere_boundary(p), topology.sphere_boundary(q, tag="t")
    joined = topology.reduced_homology(topology.join_complex([A, B]))
    predicted = topology.kunneth_prediction(topology.reduced_homology(A), topology.reduced_homology(B))
    assert topology.trim(joined) == predicted
    assert topology.trim(joined)[-1] == 1 and len(topology.trim(joined)) == p + q - 2


def test_join_with_sphere_factor():
    S0 = topology.sphere_boundary(2)
    K = topology.join_complex([S0, topology.sphere_boundary(2, tag="t")], with_sphere_factor=True)
    assert topology.trim(topology.reduced_homology(K)) == [0, 0, 1]
    with pytest.raises(ValidationError):
        topology.join_complex([S0], with_sphere_factor=True)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sets(st.integers(0, 5), min_size=1, max_size=4), min_size=1, max_size=7))
def test_reduced_homology_matches_brute_force(facets):
    K = topology.SimplicialComplex(sorted(set().union(*facets)), [frozenset(f) for f in facets])
    assert topology.trim(topology.reduced_homology(K)) == topology.trim(oracles.brute_reduced_betti_q(K.facets))


def test_z2_sees_torsion_free_rank_on_projective_plane():
    # six-vertex RP^2: H_1 = Z/2 is invisible over Q and shows up in degrees 1 and 2 over Z2
    tri = [(0, 1, 3), (1, 2, 3), (0, 2, 4), (2, 3, 4), (0, 3, 5), (1, 4, 5),
           (0, 1, 4), (1, 2, 5), (0, 2, 5), (3, 4, 5)]
    K = topology.SimplicialComplex(list(range(6)), [frozenset(t) for t in tri])
    assert topology.trim(topology.reduced_homology(K, "Q")) == []
    assert topology.trim(topology.reduced_homology(K, "Z2")) == [0, 1, 1]


def test_facet_lines_round_trip():
    K = topology.join_complex([topology.sphere_boundary(2), topology.sphere_boundary(3, tag="t")])
    names = {v: f"v{i}" for i, v in enumerate(K.vertices)}
    back = topology.from_facet_lines(topology.to_facet_lines(K, names))
    assert topology.reduced_homology(back) == topology.reduced_homology(K)


def test_example_graph_is_disconnected():
    cat = closed("example_2_8_p2")
    for min_only in (False, True):
        graph = topology.build_graph_BWZ(cat, min_only=min_only)
        verdict = topology.graph_criterion(graph)
        assert verdict.exists and graph.components()[0] == 2
    assert topology.project_q(cat, topology.build_graph_BWZ(cat))


def test_graph_on_flag_manifold_has_three_components():
    graph = topology.build_graph_BWZ(closed("su3_flag"))
    assert graph.components()[0] == 3


def test_fingerprints_agree_on_conjugate_items():
    cat = closed("su3_flag")
    prints = {topology.fingerprint(cat, i) for i in cat.proper_indices()}
    assert len(prints) == 1  # the three u(2)'s are Weyl-conjugate


def test_inconsistent_labels_are_rejected():
    cat = closed("su2xsu2_toral")
    labels = {cat.items[i].name: "same" for i in range(len(cat.items))}
    with pytest.raises(InconsistentEquivalence):
        topology.equivalence_labels(cat, labels)


def test_clique_complex_of_square_is_circle():
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    K = topology.clique_complex(range(4), edges)
    assert topology.reduced_homology(K) == [0, 1]
    full = topology.clique_complex(range(4), list(itertools.combinations(range(4), 2)))
    assert topology.is_acyclic(topology.reduced_homology(full))
