import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypvoro import rng
from hypvoro.graph import GuardError
from hypvoro.hypgeo import HPoint, ball_area, euclid_circumcircle_many, triangle_area, triangle_area_many
from hypvoro.ppp import ROOT_AT_ORIGIN, Sample, condition_root, sample_annulus, sample_ball
from hypvoro.schemes import euler_defect
from hypvoro.tess import delaunay, dual_delaunay_graph, dual_voronoi_graph, triangle_star
from hypvoro.verify import (
    VerifyError,
    _uniform_ball_z,
    cell_of,
    certified_star_radius,
    distance_compare,
    ell_formulas,
    geodesic_deviation,
    geometry_region,
    geometry_region_grid,
    horocycle,
    hull_bound,
    hull_bound_random,
    hull_ratio,
    locus_check,
    locus_ray,
    phi_star_check,
    separated_expansion,
    strong_area_scan,
    tail_triangle,
)

TEST_SEED = 2024


# -- explicit formulas ----------------------------------------------------------


@settings(max_examples=40)
@given(st.floats(0.05, 0.95), st.floats(0.01, 0.99))
def test_locus_area_constant(x, frac):
    alpha = frac * 2 * math.asin(x)
    dev, n = locus_check(x, alpha, 20)
    assert n == 20 and dev < 1e-6


def test_locus_degenerate_and_symmetric():
    o, d = locus_ray(0.5, 1e-9)
    assert abs(d.imag) < 1e-9 and d.real < 0
    assert locus_check(0.5, 2.0) == (0.0, 0)  # the ray misses the disk
    o, d = locus_ray(0.4, 0.3)
    y = o + 2.0 * d
    zero, x = HPoint.origin(), HPoint.from_poincare(0.4, 0.0)
    a = triangle_area(zero, x, HPoint.from_complex(y))
    b = triangle_area(zero, x, HPoint.from_complex(y.conjugate()))
    assert abs(a - b) < 1e-12


def test_horocycle_tangent_through_zero_and_x():
    for x in (0.1, 0.5, 0.9):
        c, r = horocycle(x)
        assert abs(abs(c) - r) < 1e-12 and abs(abs(c - x) - r) < 1e-12
        assert abs(abs(c) + r - 1.0) < 1e-12 and c.imag > 0
        assert abs(c.imag - math.sqrt(1 - x * x) / 2) < 1e-12


def test_ell_examples():
    e = ell_formulas(0.6, 0.0)
    assert e.closed == (0.6, 0.6) and e.deviation < 1e-12
    e = ell_formulas(0.6, math.pi / 2)
    assert abs(e.closed[0]) < 1e-15 and abs(e.closed[1] - 0.8) < 1e-15
    assert e.deviation < 1e-10


@settings(max_examples=60)
@given(st.floats(0.01, 0.99), st.floats(0.0, math.pi / 2))
def test_ell_two_methods(x, phi):
    assert ell_formulas(x, phi).deviation < 1e-10


def test_phi_star_small_theta_and_guard():
    small = phi_star_check(0.6, 1e-7)
    assert small.phi < 1e-5 and small.deviation < 1e-12
    with pytest.raises(VerifyError):
        phi_star_check(0.3, 0.1)


def test_phi_star_bound_frozen(calibration):
    cp = calibration["phi_star"]["C_prime"]
    for x in (0.3, 0.45, 0.6, 0.75, 0.9):
        for th in (0.002, 0.02):
            p = phi_star_check(x, th)
            assert p.deviation < 1e-9
            assert p.direct <= cp * th * (1 - x)


# -- region estimate ----------------------------------------------------------------


def test_region_theta_zero():
    e = geometry_region(0.5, 0.0, 4.0, 1000, 1)
    assert e.p == 0.0 and e.ratio == 0.0


def _plain_region(x, theta, window_r, trials, seed):
    u = rng.generator(seed, rng.MC, 77).random((trials, 2))
    z = _uniform_ball_z(u, window_r)
    zero, xs = np.zeros(trials, complex), np.full(trials, complex(x, 0))
    area = triangle_area_many(zero, xs, z)
    ce, re, deg = euclid_circumcircle_many(zero, xs, z)
    hit = (area <= theta) & ~deg & (np.abs(ce) + re < 1 - 1e-12)
    p = hit.mean()
    return p, 1.96 * math.sqrt(p * (1 - p) / trials)


@pytest.mark.parametrize("x,theta", [(0.5, 0.1), (0.2, 0.05)])
def test_region_matches_plain_monte_carlo(x, theta):
    est = geometry_region(x, theta, 3.0, 200_000, 3)
    p, half = _plain_region(x, theta, 3.0, 400_000, 3)
    assert abs(est.p - p) < 2 * (half + 0.5 * (est.ci[1] - est.ci[0]))


def test_region_window_doubling_stable():
    a = geometry_region(0.5, 0.01, 3.0, 300_000, TEST_SEED)
    b = geometry_region(0.5, 0.01, 6.0, 300_000, TEST_SEED)
    assert a.ratio_ci[0] <= b.ratio_ci[1] and b.ratio_ci[0] <= a.ratio_ci[1]


def test_region_grid_under_frozen_constant(calibration):
    cal = calibration["region"]
    rep = geometry_region_grid(cal["x_grid"], cal["theta_grid"], cal["window_r"], 100_000, TEST_SEED,
                               cal["C"])
    assert rep.all_passed, max(rep.values)
    again = geometry_region_grid(cal["x_grid"], cal["theta_grid"], cal["window_r"], 100_000, TEST_SEED,
                                 cal["C"])
    assert rep.to_json() == again.to_json()


# -- hulls ---------------------------------------------------------------------------


def test_hull_examples():
    line = [HPoint.from_complex(complex(t, 0)) for t in (-0.5, 0.0, 0.3, 0.7)]
    assert hull_ratio(line) == 0.0
    g = rng.generator(5, rng.MC, 9)
    sets = [[HPoint.from_complex(complex(w)) for w in _uniform_ball_z(g.random((50, 2)), 8.0)]
            for _ in range(100)]
    assert hull_bound(sets) <= 1.0
    for ps in sets[:10]:
        assert hull_ratio(ps) <= ball_area(8.0) / (4 * math.pi * len(ps)) + 1e-12


def test_hull_report_reproducible():
    a = hull_bound_random(50, 3)
    assert a.all_passed and a.to_json() == hull_bound_random(50, 3).to_json()


# -- triangle tail ---------------------------------------------------------------------


def test_certified_star_matches_large_window():
    for seed in range(6):
        radius, R = certified_star_radius(1.0, seed)
        base = condition_root(sample_ball(1.0, 4.0, seed))
        rad, theta = base.rad, base.theta
        r = 4.0
        while r < R + 2.0:
            ar, at = sample_annulus(1.0, r, r + 1.0, seed)
            rad, theta = np.concatenate([rad, ar]), np.concatenate([theta, at])
            r += 1.0
        big = Sample(1.0, r, seed, ROOT_AT_ORIGIN, rad, theta)
        assert triangle_star(delaunay(big, core_margin_h=0.0), 0).radius == radius


def test_tail_decreases_with_lambda():
    grid = [2.0, 2.5]
    lo = tail_triangle(1.0, grid, 400, TEST_SEED)
    hi = tail_triangle(2.0, grid, 400, TEST_SEED)
    assert all(b < a for a, b in zip(lo.values, hi.values))
    assert lo.extra["events"][0] >= lo.extra["events"][1]


def test_tail_grid_guard():
    with pytest.raises(VerifyError):
        tail_triangle(1.0, [30.0], 1, 0)


# -- strong area ----------------------------------------------------------------------


def _brute_strong(c, k_max):
    g = dual_delaunay_graph(c)
    G = nx.Graph([(a, b) for a in range(g.n) for b in g.neighbors(a).tolist()])
    area = triangle_area_many(*(c.sample.z[c.triangles[:, j]] for j in range(3)))
    core = [v for v in range(g.n) if g.core[v]]
    best = [None] * k_max
    near = [v for v in core if nx.has_path(G, g.root, v) and nx.shortest_path_length(G, g.root, v) < k_max]
    for k in range(1, k_max + 1):
        for S in itertools.combinations(near, k):
            if g.root not in S or not nx.is_connected(G.subgraph(S)):
                continue
            if euler_defect([tuple(c.triangles[t]) for t in S]) != 0:
                continue
            m = float(area[list(S)].sum()) / k
            best[k - 1] = m if best[k - 1] is None else min(best[k - 1], m)
    return best


def test_strong_area_scan_against_brute_force():
    c = delaunay(condition_root(sample_ball(1.0, 3.5, 4)), core_margin_h=1.0)
    rep = strong_area_scan(c, 4)
    g = dual_delaunay_graph(c)
    assert rep.per_size_count[0] == 1
    z = c.sample.z
    t = c.triangles[g.root]
    assert abs(rep.per_size_min_mean[0] - triangle_area(*[HPoint.from_complex(z[v]) for v in t])) < 1e-12
    assert rep.per_size_min_mean == pytest.approx(_brute_strong(c, 4), abs=1e-12)
    assert all(v is None or v > 0 for v in rep.per_size_min_mean)
    with pytest.raises(GuardError):
        strong_area_scan(c, 13)


# -- distances ------------------------------------------------------------------------


def test_distance_compare_neighbors_and_positivity():
    c = delaunay(condition_root(sample_ball(1.0, 9.0, 1)))
    g = dual_voronoi_graph(c)
    out = distance_compare(g)
    assert out and all(v > 0 for v in out.values())
    rad = g.geometry[:, 0]
    for v in g.neighbors(g.root).tolist():
        if g.core[v]:
            assert out[int(math.floor(rad[v]))] <= 1.0 / rad[v] + 1e-15


def test_geodesic_deviation_bounds():
    c = delaunay(condition_root(sample_ball(1.0, 11.0, 3)))
    assert geodesic_deviation(c, 1e-3) == 0
    s = c.sample
    for r in (1.0, 2.0, 3.0):
        d = geodesic_deviation(c, r)
        g = dual_voronoi_graph(c, root=cell_of(s, 0j))
        a = cell_of(s, complex(-math.tanh(r / 2), 0))
        from hypvoro.graph import bfs_distances
        assert 0 <= d <= bfs_distances(g, a)[g.root]


def test_separated_expansion_positive():
    rep = separated_expansion(1.0, 10.0, 2, m=6, min_sep=1.0)
    assert rep.global_min is not None and rep.global_min > 0
