from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tqsg import graphs
from tqsg.graphs import InteractionGraph, Region


def random_graph(r, n, p):
    g = nx.gnp_random_graph(n, p, seed=int(r.integers(2**31)))
    return g, InteractionGraph.from_networkx(g)


def brute_max_conn(g: nx.Graph, A: set, alpha: Fraction) -> int:
    best = 0
    nodes = list(g.nodes)
    for size in range(len(nodes), 0, -1):
        if size <= best:
            break
        for B in combinations(nodes, size):
            if len(A.intersection(B)) >= alpha * size and nx.is_connected(g.subgraph(B)):
                return size
    return best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([Fraction(1, 2), Fraction(1, 3), Fraction(1), Fraction(2, 3)]))
def test_max_conn_matches_brute_force(seed, alpha):
    r = np.random.default_rng(seed)
    n = int(r.integers(1, 10))
    nxg, g = random_graph(r, n, float(r.uniform(0.1, 0.6)))
    A = set(np.flatnonzero(r.random(n) < 0.4).tolist())
    want = brute_max_conn(nxg, A, alpha)
    for method in ("steiner", "enumerate"):
        res = graphs.max_conn_alpha(g, A, alpha, method=method)
        assert res.size == want and res.exact
        if want:
            assert len(res.witness) == want
            assert graphs.is_alpha_subset(g, A, res.witness, alpha)
            assert nx.is_connected(nxg.subgraph(res.witness))
    gr = graphs.max_conn_alpha(g, A, alpha, mode="greedy")
    assert gr.size <= want
    if gr.size:
        assert graphs.is_alpha_subset(g, A, gr.witness, alpha)


def test_alpha_one_is_largest_component():
    g = graphs.path_graph(10)
    A = {0, 1, 2, 5, 6, 9}
    assert graphs.max_conn_alpha(g, A, 1).size == 3
    assert graphs.connected_components(g, A).sizes == [3, 2, 1]


def test_alpha_half_on_path():
    # {0,1,2} and {5,6} joined through 3, 4: 5 of 7 occupied
    g = graphs.path_graph(10)
    assert graphs.max_conn_alpha(g, {0, 1, 2, 5, 6}, Fraction(1, 2)).size == 10


def test_connected_subset_count_matches_networkx():
    r = np.random.default_rng(4)
    for _ in range(10):
        nxg, g = random_graph(r, 8, 0.35)
        want = sum(1 for k in range(1, 9) for B in combinations(range(8), k)
                   if nx.is_connected(nxg.subgraph(B)))
        assert sum(1 for _ in graphs.connected_subsets(g)) == want


def test_qubit_graph_adjacency(toric4):
    g = graphs.qubit_graph(toric4.hz)
    dense = toric4.hz.dense().astype(int)
    share = (dense.T @ dense) > 0
    np.fill_diagonal(share, False)
    assert {tuple(e) for e in g.edges()} == {(i, j) for i, j in zip(*np.nonzero(share)) if i < j}
    gs = graphs.build_graphs(toric4)
    assert set(gs) == {"qubit_graph_X", "qubit_graph_Z", "check_graph_X", "check_graph_Z"}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_union_lemma(seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(4, 13))
    nxg, g = random_graph(r, n, 0.3)
    alpha = Fraction(1, 2)
    A = set(np.flatnonzero(r.random(n) < 0.3).tolist())
    L = graphs.max_conn_alpha(g, A, alpha).size
    k = math.floor(L * (1 - alpha))
    B = set(r.choice(n, size=min(k, n), replace=False).tolist()) if k else set()
    assert graphs.connected_components(g, A | B).largest <= L


def test_isolation_lemma():
    r = np.random.default_rng(9)
    for _ in range(100):
        n = int(r.integers(3, 13))
        nxg, g = random_graph(r, n, 0.3)
        A = set(np.flatnonzero(r.random(n) < 0.4).tolist())
        res = graphs.max_conn_alpha(g, A, Fraction(1, 2))
        S = res.witness
        for u, v in nxg.edges:
            assert not ((u in S and u in A and v in A and v not in S)
                        or (v in S and v in A and u in A and u not in S))


def test_percolation_constants():
    assert graphs.percolation_phi(3) == pytest.approx(4.0)
    q = graphs.percolation_q(0.02, 0.5, 3)
    assert q == pytest.approx((0.98 ** 1.5) * math.sqrt(0.02) * 2 * 4)
    assert np.isnan(graphs.percolation_bound(200, 3, 1.2, [1])).all()


def test_percolation_zero_density():
    g = graphs.random_regular_graph(3, 50, 1)
    pp = graphs.PercolationParams(0.0, Fraction(1, 2), 20, [1, 2, 3])
    tab = graphs.percolation_experiment(g, pp, np.random.default_rng(0))
    assert tab.empirical == [0.0, 0.0, 0.0] and tab.violations() == []


def test_classify_all_matches_membership():
    g = graphs.path_graph(7)
    table = graphs.classify_all(g, np.zeros(7, np.uint8), 4)
    regions = list(Region)
    r = np.random.default_rng(1)
    for idx in r.choice(128, 40, replace=False):
        x = ((int(idx) >> np.arange(7)) & 1).astype(np.uint8)
        assert graphs.omega_membership(np.zeros(7, np.uint8), x, g, None, 4) == regions[table[idx]]


def test_reduce_to_omega_lands_inside():
    g = graphs.path_graph(12)
    y = np.ones(12, np.uint8)
    z, removed = graphs.reduce_to_omega(y, np.zeros(12, np.uint8), g, None, Fraction(1, 2), 2)
    assert graphs.max_conn_alpha(g, z, Fraction(1, 2)).size <= 2
    assert removed
