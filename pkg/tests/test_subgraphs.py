import itertools
import math

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from polymer_mcmc.graph import HostGraph, cycle_graph, path_graph
from polymer_mcmc.subgraphs import all_connected_sets, connected_sets_at, connected_sets_count_bound

from conftest import star_graph


def brute_connected_sets(g, v, k):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges())
    out = []
    others = [w for w in range(g.n) if w != v]
    for r in range(k):
        for combo in itertools.combinations(others, r):
            s = (v,) + combo
            if nx.is_connected(G.subgraph(s)):
                out.append(tuple(sorted(s)))
    return sorted(out)


def test_star_example():
    g = star_graph(3)
    assert connected_sets_at(g, 0, 2) == [(0,), (0, 1), (0, 2), (0, 3)]


def test_singleton_only_at_k1():
    assert connected_sets_at(cycle_graph(5), 3, 1) == [(3,)]


def test_path_anchor_end():
    assert connected_sets_at(path_graph(3), 0, 3) == [(0,), (0, 1), (0, 1, 2)]


def test_bound_examples():
    assert connected_sets_count_bound(3, 1) == 1
    assert connected_sets_count_bound(3, 2) == pytest.approx(8.155, abs=1e-3)
    # (4e)^2 = 118.2249..., quoted loosely as 118.25
    assert connected_sets_count_bound(4, 3) == pytest.approx((4 * math.e) ** 2)
    assert connected_sets_count_bound(4, 3) == pytest.approx(118.25, rel=1e-3)
    assert connected_sets_count_bound(10, 10 ** 6) == math.inf


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.floats(0.2, 0.8), st.integers(0, 10 ** 6), st.integers(1, 5))
def test_matches_brute_force(n, p, seed, k):
    G = nx.gnp_random_graph(n, p, seed=seed)
    g = HostGraph.from_edges(n, G.edges())
    for v in range(n):
        got = connected_sets_at(g, v, k)
        assert got == brute_connected_sets(g, v, k)
        assert len(got) == len(set(got))


def test_count_bound_respected():
    # sets of size exactly k through a vertex are at most (e Delta)^(k-1)
    g = cycle_graph(12)
    for k in range(1, 6):
        exact = sum(1 for s in connected_sets_at(g, 0, k) if len(s) == k)
        assert exact <= connected_sets_count_bound(g.max_degree, k)


def test_eligible_restriction():
    g = path_graph(5)
    eligible = [True, True, False, True, True]
    assert connected_sets_at(g, 0, 4, eligible) == [(0,), (0, 1)]
    assert connected_sets_at(g, 2, 4, eligible) == []


def test_all_connected_sets_dedup():
    g = cycle_graph(5)
    sets = all_connected_sets(g, 5)
    assert len(sets) == len(set(sets))
    # C5: 5 singletons, 5 per size for sizes 2..4, one full set
    assert len(sets) == 5 + 5 + 5 + 5 + 1
