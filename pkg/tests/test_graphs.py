import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gqms.graphs import (commutant_basis, commutant_dimension_spectral, commutator_operator, complete,
                         connected_components, cycle, cycle_commutant_dim_formula, disjoint_union,
                         from_edge_list, graph_from_json, is_k_regular, parse_graph, path)


def test_builders_and_validation():
    assert cycle(5).edges == [(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]
    assert complete(4).degrees().tolist() == [3] * 4
    assert path(3).edges == [(0, 1), (1, 2)]
    with pytest.raises(ValueError):
        cycle(2)
    with pytest.raises(ValueError):
        from_edge_list(3, [(0, 0)])
    with pytest.raises(ValueError):
        from_edge_list(3, [(0, 3)])


def test_parse_graph_specs():
    assert parse_graph("cycle:7").n == 7
    U = parse_graph("union:cycle:3+cycle:3")
    assert U.n == 6 and U.name == "union:cycle:3+cycle:3"
    assert connected_components(U).count == 2
    for bad in ("cycle", "wheel:5", "union:cycle:3", "cycle:x"):
        with pytest.raises(ValueError):
            parse_graph(bad)


def test_graph_json_roundtrip():
    G = cycle(6)
    H = graph_from_json(G.to_json())
    assert np.array_equal(G.adjacency, H.adjacency)
    with pytest.raises(ValueError):
        graph_from_json({"edges": []})


def test_regularity():
    assert is_k_regular(cycle(6)) == 2
    assert is_k_regular(complete(5)) == 4
    assert is_k_regular(path(4)) is None


def test_components_labels():
    G = disjoint_union(cycle(3), path(2))
    comp = connected_components(G)
    assert comp.count == 2
    assert comp.vertices(0) == [0, 1, 2] and comp.vertices(1) == [3, 4]


def test_commutator_operator_row_major():
    rng = np.random.default_rng(0)
    A = cycle(5).adjacency.astype(float)
    X = rng.standard_normal((5, 5))
    assert np.allclose(commutator_operator(A) @ X.ravel(), (A @ X - X @ A).ravel())


@pytest.mark.parametrize("n", range(3, 13))
def test_cycle_commutant_three_routes(n):
    G = cycle(n)
    d = commutant_dimension_spectral(G)
    assert d == commutant_basis(G).dimension == cycle_commutant_dim_formula(n)
    assert d == (2 * n - 1 if n % 2 else 2 * n - 2)


def test_commutant_basis_commutes():
    G = disjoint_union(cycle(3), cycle(3))
    B = commutant_basis(G)
    A = G.adjacency
    assert B.dimension == 20
    for X in B.basis:
        assert np.abs(A @ X - X @ A).max() < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), max_size=15))
def test_spectral_and_nullspace_agree_on_random_graphs(n, pairs):
    edges = {(min(i, j), max(i, j)) for i, j in pairs if i != j and i < n and j < n}
    G = from_edge_list(n, sorted(edges))
    assert commutant_dimension_spectral(G) == commutant_basis(G).dimension
