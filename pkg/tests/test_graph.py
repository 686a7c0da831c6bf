
import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from polymer_mcmc.graph import (GraphFormatError, GraphValidationError,
                                HostGraph, MissingBipartitionError, bipartite_expansion_constant,
                                check_bipartite_vertex_expansion, check_edge_expansion,
                                complete_bipartite, complete_graph, cycle_graph, edge_cut_sizes,
                                edge_expansion_constant, format_graph,
                                generate_random_regular_bipartite, load_graph, parse_graph,
                                path_graph, power_graph, save_graph)


def to_nx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges())
    return G


def test_parse_path():
    g = parse_graph("3 2\n0 1\n1 2\n")
    assert g.n == 3 and g.max_degree == 2 and g.edges() == [(0, 1), (1, 2)]
    assert g.bipartition is None


def test_parse_bipartite_with_parts():
    g = parse_graph("4 4 bipartite\n0 2\n0 1\n1 2\n2 3\n3 0\n")
    assert g.bipartition == (0, 1, 0, 1)
    assert g.part(0) == [0, 2]


@pytest.mark.parametrize("text, err", [
    ("2 1\n0 0\n", GraphValidationError),
    ("3 2\n0 1\n", GraphFormatError),
    ("3 1\n0 x\n", GraphFormatError),
    ("3 1\n0 5\n", GraphValidationError),
    ("3 2\n0 1\n0 1\n", GraphValidationError),
    ("4 1 bipartite\n0 2\n0 2\n", GraphValidationError),
])
def test_parse_rejects(text, err):
    with pytest.raises(err):
        parse_graph(text)


def test_comments_ignored():
    g = parse_graph("# a path\n3 2  # header\n0 1\n# mid\n1 2\n")
    assert g.num_edges == 2


def test_round_trip(tmp_path):
    g = generate_random_regular_bipartite(5, 3, seed=4)
    path = tmp_path / "g.txt"
    save_graph(g, path)
    h = load_graph(path)
    assert h == g
    assert parse_graph(format_graph(cycle_graph(5))) == cycle_graph(5)


def test_power_graph_examples():
    assert power_graph(path_graph(3)).edges() == complete_graph(3).edges()
    assert power_graph(cycle_graph(4)).edges() == complete_graph(4).edges()
    assert power_graph(complete_graph(2)).edges() == [(0, 1)]


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.floats(0.1, 0.7), st.integers(0, 10 ** 6))
def test_power_graph_matches_networkx(n, p, seed):
    G = nx.gnp_random_graph(n, p, seed=seed)
    g = HostGraph.from_edges(n, G.edges())
    expected = nx.power(G, 2) if G.number_of_edges() else G
    assert set(power_graph(g).edges()) == {tuple(sorted(e)) for e in expected.edges()}


def test_edge_expansion_examples():
    assert check_edge_expansion(cycle_graph(4), 1.0).holds
    rep = check_edge_expansion(path_graph(3), 2.0)
    assert rep.verified == "exact" and rep.witness == (0,)
    assert check_edge_expansion(cycle_graph(30), 0.1).verified == "unverified"


def test_edge_cut_sizes_against_networkx():
    g = generate_random_regular_bipartite(4, 3, seed=1)
    G = to_nx(g)
    cut = edge_cut_sizes(g)
    for mask in range(1 << g.n):
        S = [v for v in range(g.n) if mask >> v & 1]
        assert cut[mask] == nx.cut_size(G, S)


def test_expansion_constants():
    # frozen from exhaustive enumeration with networkx cut sizes
    assert edge_expansion_constant(cycle_graph(4)) == 1.0
    assert edge_expansion_constant(cycle_graph(6)) == pytest.approx(2 / 3)
    assert edge_expansion_constant(complete_graph(4)) == 2.0
    assert edge_expansion_constant(path_graph(3)) == 1.0
    assert bipartite_expansion_constant(complete_bipartite(3, 3)) == 2.0
    assert bipartite_expansion_constant(cycle_graph(4)) == 1.0


def test_bipartite_expansion_examples():
    assert check_bipartite_vertex_expansion(complete_bipartite(3, 3), 0.5).holds
    assert check_bipartite_vertex_expansion(cycle_graph(4), 0.5).holds
    with pytest.raises(MissingBipartitionError):
        check_bipartite_vertex_expansion(complete_graph(3), 0.5)
    with pytest.raises(ValueError):
        check_bipartite_vertex_expansion(cycle_graph(4), 1.5)
    # C8: S = {0, 2} on side 0 has N(S) = {1, 3, 7}, below (1 + 0.75) * 2 = 3.5
    rep = check_bipartite_vertex_expansion(cycle_graph(8), 0.75)
    assert rep.witness == (0, 2) and rep.witness_side == 0


def test_generator_examples():
    assert generate_random_regular_bipartite(3, 3, seed=11).edges() == complete_bipartite(3, 3).edges()
    g = generate_random_regular_bipartite(4, 2, seed=7)
    assert all(g.degree(v) == 2 for v in range(8))
    assert all(len(c) % 2 == 0 for c in nx.cycle_basis(to_nx(g)))
    with pytest.raises(ValueError):
        generate_random_regular_bipartite(2, 3, seed=0)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 40), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_generator_regular_and_bipartite(n, d, seed):
    d = min(d, n)
    g = generate_random_regular_bipartite(n, d, seed)
    assert all(g.degree(v) == d for v in range(g.n))
    assert all(g.bipartition[u] != g.bipartition[v] for u, v in g.edges())
    assert generate_random_regular_bipartite(n, d, seed) == g


def test_large_generator_fast():
    g = generate_random_regular_bipartite(5000, 3, seed=1)
    assert g.n == 10_000 and g.num_edges == 15_000


def test_neighbourhood_and_connectivity():
    g = cycle_graph(6)
    assert g.neighbourhood([0]) == {1, 5}
    assert g.neighbourhood([0, 1]) == {0, 1, 2, 5}  # union of neighbour lists
    assert g.is_connected_set([0, 1, 2]) and not g.is_connected_set([0, 2])
    assert g.distances_from(0) == [0, 1, 2, 3, 2, 1]
