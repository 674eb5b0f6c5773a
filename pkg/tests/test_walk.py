import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypvoro.graph import DualGraph
from hypvoro.ppp import condition_root, sample_ball, Sample
from hypvoro.tess import delaunay, dual_voronoi_graph
from hypvoro.walk import (
    LEFT_CORE,
    STEPS_EXHAUSTED,
    RegularTree,
    WalkError,
    WalkTrace,
    choose_k_eval,
    harmonic_measure,
    histogram_csv,
    implicit_walk,
    oscillation_profile,
    reversibility_test,
    simple_walk,
    speed_estimate,
    star_graph,
    star_tv_exact,
    tree_ensemble,
    walk_ensemble,
)


def from_nx(G, root=0, core=None, geometry=None):
    return DualGraph.from_adjacency([list(G[v]) for v in range(G.number_of_nodes())], root, core,
                                    geometry=geometry)


def test_k2_alternates():
    g = from_nx(nx.path_graph(2))
    for root in (0, 1):
        t = simple_walk(g, root, 20, seed=1)
        assert t.dist.tolist() == [j % 2 for j in range(21)]


def test_three_cycle_occupation_uniform():
    t = simple_walk(from_nx(nx.cycle_graph(3)), 0, 100_000, seed=2)
    occ = np.bincount(t.vertices, minlength=3) / len(t)
    assert np.all(np.abs(occ - 1 / 3) < 0.01)


def test_walk_deterministic_across_threads():
    g = dual_voronoi_graph(delaunay(condition_root(sample_ball(1.0, 9.0, 3))))
    a = walk_ensemble(g, 30, 200, seed=5, threads=1)
    b = walk_ensemble(g, 30, 200, seed=5, threads=3)
    assert [x.to_json() for x in a] == [y.to_json() for y in b]
    assert all(x.stop in (LEFT_CORE, STEPS_EXHAUSTED) for x in a)
    assert all(np.all(g.core[x.vertices[:-1]]) for x in a)


def test_walk_stays_on_edges():
    G = nx.random_regular_graph(3, 50, seed=1)
    g = from_nx(G)
    t = simple_walk(g, 0, 500, seed=3)
    assert all(G.has_edge(a, b) for a, b in zip(t.vertices[:-1].tolist(), t.vertices[1:].tolist()))


def test_step_law_uniform_over_neighbors():
    g = from_nx(nx.star_graph(4))
    firsts = np.array([simple_walk(g, 0, 1, seed=9, walk_id=w).vertices[1] for w in range(20_000)])
    freq = np.bincount(firsts, minlength=5)[1:] / len(firsts)
    assert np.all(np.abs(freq - 0.25) < 0.015)


def test_implicit_walk_matches_kernel_on_finite_tree():
    # a deep finite 3-regular tree with neighbors ordered parent first, like RegularTree
    depth = 12
    tree = RegularTree(3)
    ids, adj, frontier = {(): 0}, [[]], [()]
    for _ in range(depth):
        new = []
        for v in frontier:
            for k in range(3 if not v else 2):
                w = tree.neighbor(v, k if not v else k + 1)
                ids[w] = len(adj)
                adj.append([])
                adj[ids[v]].append(ids[w])
                adj[ids[w]].append(ids[v])
                new.append(w)
        frontier = new
    g = DualGraph.from_adjacency(adj, root=0)
    for seed in range(5):
        t = implicit_walk(tree, (), depth - 1, seed=seed)
        assert t.dist.tolist() == simple_walk(g, 0, depth - 1, seed=seed).dist.tolist()


@pytest.mark.parametrize("d", [3, 4])
def test_tree_speed(d):
    est = speed_estimate(tree_ensemble(d, 200, 400, seed=1), 400)
    assert abs(est.mean - (d - 2) / d) < 0.02


def test_cycle_speed_vanishes():
    g = from_nx(nx.cycle_graph(10))
    tr = walk_ensemble(g, 100, 2000, seed=2)
    assert speed_estimate(tr, 2000).mean < 0.01
    assert speed_estimate(tr, 2000).mean < speed_estimate(tr, 10).mean


def test_speed_estimate_bookkeeping():
    tr = tree_ensemble(3, 20, 50, seed=0)
    with pytest.raises(WalkError):
        speed_estimate(tr, 0)
    with pytest.raises(WalkError):
        speed_estimate(tr, 51)
    e = speed_estimate(tr, 50)
    assert e.eligible == 20 and e.excluded == 0 and e.valid
    assert choose_k_eval(tr) == 50


def _line_trace(n):
    pos = np.tanh(0.5 * np.arange(n)) + 0j
    return WalkTrace(np.arange(n), np.arange(n), pos, STEPS_EXHAUSTED)


def test_oscillation_examples():
    osc = oscillation_profile(_line_trace(30))
    assert len(osc) == 29 and np.all(osc < 1e-15)
    assert harmonic_measure([_line_trace(30)], 8)[1][0] == 1.0
    early = WalkTrace(np.arange(4), np.arange(4), np.array([0, 0.5, 0.5j, -0.5]), LEFT_CORE)
    osc = oscillation_profile(early)
    assert len(osc) == 3 and np.all(np.diff(osc) <= 0)
    with pytest.raises(WalkError):
        oscillation_profile(WalkTrace(np.arange(2), np.arange(2), None, STEPS_EXHAUSTED))


@settings(max_examples=30)
@given(st.lists(st.complex_numbers(max_magnitude=0.99, min_magnitude=0.01), min_size=2, max_size=40))
def test_oscillation_is_nonincreasing_tail_diameter(ps):
    t = WalkTrace(np.arange(len(ps)), np.arange(len(ps)), np.array(ps), STEPS_EXHAUSTED)
    osc = oscillation_profile(t)
    u = np.array(ps[1:]) / np.abs(ps[1:])
    for k in range(len(osc)):
        tail = u[k:]
        assert abs(osc[k] - np.abs(tail[:, None] - tail[None, :]).max()) < 1e-12


def test_harmonic_measure_single_trace_is_point_mass():
    c, m = harmonic_measure([_line_trace(5)], 16)
    assert m.sum() == 1.0 and m.max() == 1.0 and len(c) == 16


def test_harmonic_measure_rotation_equivariance():
    bins, shift = 64, 5
    s = condition_root(sample_ball(1.0, 9.0, 6))
    rot = Sample(s.lam, s.window_r, s.seed, s.conditioning, s.rad,
                 np.where(s.rad > 0, (s.theta + 2 * math.pi * shift / bins) % (2 * math.pi), 0.0))
    ms = []
    for x in (s, rot):
        g = dual_voronoi_graph(delaunay(x))
        ms.append(harmonic_measure(walk_ensemble(g, 300, 400, seed=1), bins)[1])
    assert np.array_equal(np.roll(ms[0], shift), ms[1])


def test_harmonic_measure_normalized_and_csv():
    g = dual_voronoi_graph(delaunay(condition_root(sample_ball(1.0, 10.0, 2))))
    c, m = harmonic_measure(walk_ensemble(g, 1000, 300, seed=3), 64)
    assert abs(m.sum() - 1.0) < 1e-12
    text = histogram_csv(c, m)
    lines = text.strip().split("\n")
    assert lines[0] == "angle_bin_center,mass" and len(lines) == 65


def test_reversibility_regular_and_star():
    cyc = from_nx(nx.cycle_graph(7))
    assert reversibility_test([cyc], 5000, seed=1).tv == 0.0
    assert star_tv_exact(5, True) == 0.0
    assert abs(star_tv_exact(5, False) - 4 / 6) < 1e-15
    st5 = star_graph(5)
    mc = reversibility_test([st5], 50_000, seed=2, degree_biased=False).tv
    assert abs(mc - star_tv_exact(5, False)) < 0.01
    assert reversibility_test([st5], 50_000, seed=2).tv < 0.01
