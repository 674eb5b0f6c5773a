import itertools
import os
import subprocess
import sys
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypvoro import _pykernels
from hypvoro.graph import (
    UNREACHABLE,
    DualGraph,
    GraphError,
    GuardError,
    ball_growth,
    bfs_distances,
    boundary_volume,
    delta_i,
    is_isolated_core,
    min_expansion,
)
from hypvoro.kernels import BACKEND


def from_nx(G, root=0, core=None):
    return DualGraph.from_adjacency([list(G[v]) for v in range(G.number_of_nodes())], root, core)


def regular_tree(depth):
    """3-regular tree to the given depth; leaves are not core."""
    G = nx.Graph()
    G.add_node(0)
    frontier, nxt, level = [0], 1, {0: 0}
    for d in range(depth):
        new = []
        for v in frontier:
            for _ in range(3 if v == 0 else 2):
                G.add_edge(v, nxt)
                level[nxt] = d + 1
                new.append(nxt)
                nxt += 1
        frontier = new
    return from_nx(G, 0, [level[v] < depth for v in range(G.number_of_nodes())])


def test_compiled_backend_loaded():
    assert BACKEND == "compiled"


PIPELINE = """
import json
from hypvoro import BACKEND, condition_root, delaunay, dual_voronoi_graph, min_expansion, sample_ball
from hypvoro.walk import walk_ensemble
g = dual_voronoi_graph(delaunay(condition_root(sample_ball(1.0, 9.0, 3))))
e = min_expansion(g, m=6)
w = [t.vertices.tolist() for t in walk_ensemble(g, 5, 50, 3)]
print(json.dumps([BACKEND, [str(x) for x in e.per_size_min], w]))
"""


def test_pure_switch_gives_identical_results():
    def run(pure):
        env = dict(os.environ, HYPVORO_PURE=pure)
        out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, check=True, capture_output=True, text=True)
        return out.stdout
    fast, slow = run("0"), run("1")
    assert fast.startswith('["compiled"') and slow.startswith('["python"')
    assert fast.split(",", 1)[1] == slow.split(",", 1)[1]


def test_bfs_examples():
    assert bfs_distances(from_nx(nx.cycle_graph(3)), 0).tolist() == [0, 1, 1]
    assert bfs_distances(from_nx(nx.path_graph(5)), 0).tolist() == [0, 1, 2, 3, 4]
    g = DualGraph.from_edges(3, np.array([[0, 1]]))
    assert bfs_distances(g, 0)[2] == UNREACHABLE


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6))
def test_bfs_symmetric_and_matches_networkx(seed):
    G = nx.gnp_random_graph(40, 0.08, seed=seed)
    g = from_nx(G)
    rs = np.random.default_rng(seed)
    D = {v: bfs_distances(g, v) for v in range(40)}
    for a, b in rs.integers(0, 40, size=(100, 2)):
        assert D[a][b] == D[b][a]
    ref = nx.single_source_shortest_path_length(G, 0)
    assert all(D[0][v] == ref.get(v, UNREACHABLE) for v in range(40))
    assert np.array_equal(D[0], _pykernels.bfs(g.indptr, g.indices, 0))


def test_ball_growth():
    g = regular_tree(7)
    out = ball_growth(g, 0, 10)
    assert out["counts"] == [3 * 2 ** r - 2 for r in range(7)]
    assert abs(out["growth"][-1] - out["counts"][-1] ** (1 / 6)) < 1e-12
    one = ball_growth(DualGraph.from_adjacency([[]]), 0, 5)
    assert one["counts"] == [1] and one["growth"] == [1.0]


def test_boundary_volume_examples():
    g = regular_tree(3)
    assert boundary_volume(g, [0]) == (3, 3)
    k4 = from_nx(nx.complete_graph(4))
    assert boundary_volume(k4, range(4)) == (0, 12)
    for S in itertools.combinations(range(4), 2):
        assert boundary_volume(k4, S) == (4, 6)


def test_min_expansion_examples():
    p5 = min_expansion(from_nx(nx.path_graph(5)), 0, 3)
    assert p5.per_size_min == [Fraction(1), Fraction(1, 3), Fraction(1, 5)]
    assert p5.global_min == Fraction(1, 5) and p5.witness == [0, 1, 2]
    t = min_expansion(regular_tree(4), 0, 2)
    assert t.per_size_min[1] == Fraction(2, 3)
    assert min_expansion(from_nx(nx.cycle_graph(6)), 0, 1).global_min == 1
    with pytest.raises(GuardError):
        min_expansion(regular_tree(3), 0, 15)
    with pytest.raises(GraphError):
        min_expansion(regular_tree(3), 0, 0)


def brute_expansion(G, root, m, core):
    best = {}
    nodes = [v for v in G if core[v]]
    for k in range(1, m + 1):
        for S in itertools.combinations(nodes, k):
            if root not in S or not nx.is_connected(G.subgraph(S)):
                continue
            vol = sum(G.degree(v) for v in S)
            b = sum(1 for v in S for w in G[v] if w not in S)
            if vol:
                x = Fraction(b, vol)
                best[k] = min(best.get(k, x), x)
    return [best.get(k) for k in range(1, m + 1)]


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6), st.integers(1, 5))
def test_min_expansion_matches_brute_force(seed, m):
    G = nx.gnp_random_graph(14, 0.25, seed=seed)
    core = np.random.default_rng(seed).random(14) < 0.8
    core[0] = True
    g = from_nx(G, 0, core)
    rep = min_expansion(g, 0, m)
    assert rep.per_size_min == brute_expansion(G, 0, m, core)
    py = _pykernels.expansion_scan(g.indptr, g.indices, g.core.astype(np.uint8), 0, m)
    from hypvoro import _ckernels
    cc = _ckernels.expansion_scan(g.indptr, g.indices, g.core.astype(np.uint8), 0, m)
    for a, b in zip(py, cc):
        assert np.array_equal(np.asarray(a), np.asarray(b))


def test_delta_and_isolated_core():
    star = from_nx(nx.star_graph(3))  # center 0 of degree 3, leaves of degree 1
    assert delta_i(star, [], 1) == 0
    assert delta_i(star, [0], 1) == -2
    assert delta_i(star, [1], 2) == 1
    assert is_isolated_core(star, [1], 2)
    assert not is_isolated_core(star, [0], 1)
    # two leaves are each isolated 2-cores; so is their union
    assert is_isolated_core(star, [1, 2], 2)


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6))
def test_union_of_isolated_cores_is_isolated(seed):
    G = nx.gnp_random_graph(9, 0.3, seed=seed)
    g = from_nx(G)
    i = Fraction(2)
    cores = [set(S) for k in range(1, 4) for S in itertools.combinations(range(9), k)
             if is_isolated_core(g, S, i)]
    for A, B in itertools.combinations(cores, 2):
        assert is_isolated_core(g, A | B, i)


def test_json_round_trip_and_validation():
    g = regular_tree(3)
    h = DualGraph.from_json(g.to_json())
    assert h.to_json() == g.to_json()
    with pytest.raises(GraphError):
        DualGraph.from_adjacency([[1], []])
    with pytest.raises(GraphError):
        DualGraph.from_dict({"kind": "other", "root": 0, "n": 1, "adjacency": [[]], "core": [True]})
