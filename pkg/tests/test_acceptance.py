"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line through the ``accept`` fixture; the
lines are repeated in the terminal summary.  Wall-clock budgets are
asserted alongside the numerical tolerances.
"""
import gc
import math
import time

import numpy as np
import pytest

from hypvoro.cli import main
from hypvoro.hypgeo import HPoint, ball_area, dist_h
from hypvoro.ppp import Sample, condition_root, sample_ball
from hypvoro.schemes import Scheme, ZParams, count_planar_pairs, enumerate_schemes, euler_defect, z_process
from hypvoro.tess import core_margin, delaunay, delaunay_bruteforce, dual_delaunay_graph, dual_voronoi_graph
from hypvoro.graph import min_expansion
from hypvoro.verify import (
    ell_formulas,
    hull_bound_random,
    locus_check,
    phi_star_check,
    random_point_sets,
    tail_triangle,
)
from hypvoro.walk import (
    choose_k_eval,
    oscillation_profile,
    reversibility_test,
    speed_estimate,
    star_graph,
    tree_ensemble,
    walk_ensemble,
)

TEST_SEED = 2024


class Clock:
    def __init__(self, budget: float):
        self.budget = budget
        self.t0 = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def ok(self) -> bool:
        return self.elapsed < self.budget

    def __str__(self) -> str:
        return f"{self.elapsed:.1f}s/{self.budget:g}s"


# -- 1: closed forms ---------------------------------------------------------------------

# values written as targets for the ball area at r = 1, 2
AREA_LITERALS = {1.0: 3.4616, 2.0: 17.3552}


def test_c01_closed_form_area_formula():
    """The area formula 2 pi (cosh r - 1) and the distance value, to 1e-9."""
    for r in (1.0, 2.0):
        assert abs(ball_area(r) - 2 * math.pi * (math.cosh(r) - 1)) < 1e-9
    assert abs(dist_h(HPoint.origin(), HPoint.from_poincare(0.5, 0.0)) - math.log(3)) < 1e-9


@pytest.mark.xfail(strict=True, reason="the literal targets disagree with the area formula beyond 1e-9")
def test_c01_closed_form_literals(accept):
    clock = Clock(1.0)
    got = {r: ball_area(r) for r in AREA_LITERALS}
    d = abs(dist_h(HPoint.origin(), HPoint.from_poincare(0.5, 0.0)) - math.log(3))
    devs = {r: abs(got[r] - v) for r, v in AREA_LITERALS.items()}
    ok = all(x < 1e-9 for x in devs.values()) and d < 1e-9 and clock.ok()
    accept(1, ok, f"ball_area(1)={got[1.0]:.10f} vs 3.4616 (|d|={devs[1.0]:.2e}), "
                  f"ball_area(2)={got[2.0]:.10f} vs 17.3552 (|d|={devs[2.0]:.2e}), "
                  f"dist |d|={d:.1e}, {clock}")
    assert ok


# -- 2: Delaunay against brute force --------------------------------------------------------


def test_c02_delaunay_oracle(accept):
    clock = Clock(120.0)
    bad, sizes = [], []
    for seed in range(200):
        s = sample_ball(1.0, 3.0, seed)
        n = min(len(s), 40)
        s = Sample(s.lam, s.window_r, s.seed, s.conditioning, s.rad[:n], s.theta[:n])
        sizes.append(n)
        if delaunay(s).triangle_set() != delaunay_bruteforce(s).triangle_set():
            bad.append(seed)
    ok = not bad and clock.ok()
    accept(2, ok, f"200 seeds, n in [{min(sizes)}, {max(sizes)}], mismatches={bad}, {clock}")
    assert ok


# -- 3, 4: explicit formulas --------------------------------------------------------------


def test_c03_locus(accept):
    clock = Clock(30.0)
    worst, probes = 0.0, []
    for x in np.linspace(0.05, 0.95, 10):
        top = 2.0 * math.asin(x)
        for j in range(10):
            dev, n = locus_check(float(x), top * (j + 1) / 11, 100)
            worst = max(worst, dev)
            probes.append(n)
    ok = worst < 1e-6 and min(probes) > 0 and clock.ok()
    accept(3, ok, f"10x10 grid, max deviation {worst:.2e}, {clock}")
    assert ok


def test_c04_two_methods(accept, calibration):
    clock = Clock(30.0)
    ell = max(ell_formulas(float(x), float(p)).deviation
              for x in np.linspace(0.05, 0.95, 10) for p in np.linspace(0.0, math.pi / 2, 10))
    cal = calibration["phi_star"]
    phi = max(phi_star_check(x, th).deviation for x in cal["x_grid"] for th in cal["theta_grid"])
    ok = ell < 1e-9 and phi < 1e-9 and clock.ok()
    accept(4, ok, f"ell max |A-B|={ell:.2e}, phi* max |A-B|={phi:.2e}, {clock}")
    assert ok


# -- 5: hull bound ------------------------------------------------------------------------


def test_c05_hull_bound(accept):
    clock = Clock(120.0)
    rep = hull_bound_random(1000, TEST_SEED, (3, 100), 8.0)
    worst = rep.extra["worst"]
    ok = all(rep.passed) and worst <= 1.0 and clock.ok()
    accept(5, ok, f"1000 sets, worst ratio {worst:.4f}, {clock}")
    assert ok


# -- 6: triangle tail ---------------------------------------------------------------------


def test_c06_triangle_tail(accept):
    clock = Clock(600.0)
    r_star = core_margin(1.0)
    grid = [2.0, 2.5, 3.0, 3.5, r_star]
    rep = tail_triangle(1.0, grid, 10_000, TEST_SEED)
    p = rep.values
    decreasing = all(p[i] < p[i - 1] for i in range(1, 4))
    ok = decreasing and rep.extra["events"][4] == 0 and all(rep.passed) and clock.ok()
    accept(6, ok, f"p={[round(v, 5) for v in p[:4]]}, events at r={r_star:.4f}: {rep.extra['events'][4]}, "
                  f"{clock}")
    assert ok


# -- 7: 3-regularity and Euler ----------------------------------------------------------------


def fan(n):
    return [(0, i, i + 1) for i in range(1, n + 1)]


def strip(n):
    return [(i, i + 1, i + 2) for i in range(n)]


def test_c07_regularity_and_euler(accept):
    clock = Clock(300.0)
    bad, core_total = [], 0
    for seed in range(50):
        g = dual_delaunay_graph(delaunay(condition_root(sample_ball(1.0, 10.0, seed))))
        deg = g.degree[g.core]
        core_total += len(deg)
        if len(deg) == 0 or np.any(deg != 3):
            bad.append(seed)
    fixtures = [fan(n) for n in range(1, 30)] + [strip(n) for n in range(1, 30)]
    defects = [euler_defect(t) for t in fixtures]
    ok = not bad and all(d == 0 for d in defects) and clock.ok()
    accept(7, ok, f"{core_total} core triangles over 50 samples, bad seeds={bad}, "
                  f"{len(fixtures)} fan/strip fixtures with defect 0: {all(d == 0 for d in defects)}, {clock}")
    assert ok


# -- 8: tree speed ----------------------------------------------------------------------


def test_c08_tree_speed(accept):
    clock = Clock(60.0)
    got = {}
    for d in (3, 4, 5):
        est = speed_estimate(tree_ensemble(d, 200, 400, TEST_SEED), 400, TEST_SEED)
        got[d] = est.mean
    ok = all(abs(got[d] - (d - 2) / d) <= 0.02 for d in got) and clock.ok()
    accept(8, ok, ", ".join(f"d={d}: {v:.4f} vs {(d - 2) / d:.4f}" for d, v in got.items()) + f", {clock}")
    assert ok


# -- 9, 13, 14: large window ---------------------------------------------------------------


@pytest.fixture(scope="module")
def big():
    t0 = time.perf_counter()
    c = delaunay(condition_root(sample_ball(1.0, 14.0, TEST_SEED)))
    out = {"voronoi": dual_voronoi_graph(c), "delaunay": dual_delaunay_graph(c)}
    del c
    gc.collect()
    out["build"] = time.perf_counter() - t0
    return out


def test_c09_positive_speed(accept, big):
    clock = Clock(900.0 - big["build"])
    parts, ok = [], True
    for name in ("delaunay", "voronoi"):
        traces = walk_ensemble(big[name], 200, 5000, TEST_SEED)
        k = choose_k_eval(traces, 0.95)
        est = speed_estimate(traces, k, TEST_SEED)
        ok &= est.ci_low > 0 and est.eligible >= 0.95 * len(traces)
        parts.append(f"{name}: k_eval={k}, mean={est.mean:.3f}, CI=[{est.ci_low:.3f}, {est.ci_high:.3f}]")
    ok &= clock.ok()
    accept(9, ok, "; ".join(parts) + f", {clock.elapsed + big['build']:.1f}s/900s")
    assert ok


def test_c13_reversibility(accept, big):
    clock = Clock(600.0)
    tv = reversibility_test([big["voronoi"]], 100_000, TEST_SEED).tv
    control = reversibility_test([star_graph(5)], 100_000, TEST_SEED, degree_biased=False).tv
    ok = tv < 0.05 and control > 0.2 and clock.ok()
    accept(13, ok, f"TV={tv:.4f} on the Voronoi dual, unbiased star control={control:.4f}, {clock}")
    assert ok


def test_c14_boundary_convergence(accept, big):
    clock = Clock(300.0)
    traces = walk_ensemble(big["voronoi"], 100, 5000, TEST_SEED)
    osc = [oscillation_profile(t) for t in traces if t.steps >= 4]
    first = float(np.median([o[0] for o in osc]))
    last = float(np.median([o[(3 * len(o)) // 4] for o in osc]))
    drop = first / last if last > 0 else math.inf
    ok = len(osc) == 100 and drop >= 4.0 and clock.ok()
    accept(14, ok, f"median osc {first:.4f} -> {last:.4f} (drop {drop:.1f}x) over {len(osc)} walks, {clock}")
    assert ok


# -- 10: expansion ------------------------------------------------------------------------


def test_c10_expansion(accept):
    clock = Clock(600.0)
    per = []
    for seed in range(50):
        g = dual_voronoi_graph(delaunay(condition_root(sample_ball(1.0, 10.0, seed))))
        per.append(min_expansion(g, m=10).per_size_min)
    positive = all(x is not None and x > 0 for row in per for x in row)
    pooled = [min(row[i] for row in per) for i in range(10)]
    monotone = all(pooled[i + 1] <= pooled[i] for i in range(9))
    ok = positive and monotone and clock.ok()
    accept(10, ok, f"pooled per-size minima {[round(float(x), 4) for x in pooled]}, {clock}")
    assert ok


# -- 11, 12: schemes ----------------------------------------------------------------------


def test_c11_scheme_counts(accept, calibration):
    clock = Clock(300.0)
    C = calibration["planar_pairs"]["C"]
    counts = (enumerate_schemes(3)[0], enumerate_schemes(4)[0])
    worst, n_sets = 0.0, 0
    for k, n in ((3, 10), (4, 10), (5, 6), (6, 3)):
        for _, pts in random_point_sets(n, TEST_SEED + k, (k, k), 3.0):
            worst = max(worst, count_planar_pairs(pts) / (C * k) ** k)
            n_sets += 1
    ok = counts == (1, 3) and worst <= 1.0 and clock.ok()
    accept(11, ok, f"schemes(3,4)={counts}, worst count/(Ck)^k={worst:.4f} over {n_sets} sets, {clock}")
    assert ok


def test_c12_z_tail(accept, calibration):
    clock = Clock(300.0)
    eps = calibration["z_tail"]["eps"]
    p = ZParams(3.0, 0.1, Scheme.chain(40), TEST_SEED)
    p10 = z_process(p, 10, trials=1_000_000, eps=eps).tail
    p40 = z_process(p, 40, trials=1_000_000, eps=eps).tail
    ratio = p10 / p40 if p40 > 0 else math.inf
    ok = p10 > 0 and ratio >= 10 and clock.ok()
    accept(12, ok, f"eps={eps:.3e}, P(10)={p10:.2e}, P(40)={p40:.2e}, ratio={ratio:.1f}, {clock}")
    assert ok


# -- 15: determinism ----------------------------------------------------------------------


def test_c15_pipeline_determinism(accept, tmp_path):
    clock = Clock(120.0)
    runs = []
    for i, threads in enumerate((1, 2, 4)):
        d = tmp_path / f"run{i}"
        d.mkdir()
        s, g, e = d / "sample.json", d / "graph.json", d / "expansion.json"
        codes = [
            main(["sample", "--lambda", "1", "--radius-h", "10", "--seed", str(TEST_SEED), "--out", str(s),
                  "--threads", str(threads)]),
            main(["tessellate", "--in", str(s), "--out", str(g), "--threads", str(threads)]),
            main(["expansion", "--in", str(g), "--m", "8", "--out", str(e), "--threads", str(threads)]),
        ]
        assert codes == [0, 0, 0]
        runs.append([p.read_bytes() for p in (s, g, e)])
    same = all(r == runs[0] for r in runs[1:])
    ok = same and clock.ok()
    accept(15, ok, f"threads 1/2/4, sample/graph/expansion bytes identical: {same}, {clock}")
    assert ok
