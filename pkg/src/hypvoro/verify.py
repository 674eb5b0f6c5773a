"""Monte Carlo and exact checks of the quantitative geometric estimates.

Every check is a pure function of its parameters and seed.  Reports carry
the grid, the empirical values with intervals, the bound they are compared
with and a pass flag per grid point.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Any, Iterator, Optional, Sequence

import numpy as np
from scipy import stats

from . import rng
from .graph import DualGraph, GraphError, GuardError, bfs_distances, min_expansion
from .hypgeo import (
    EPS_BOUNDARY,
    RAD_CAP,
    HPoint,
    ball_area,
    convex_hull_h,
    dist_h_many,
    euclid_circumcircle_many,
    polygon_area_h,
    triangle_area,
    triangle_area_many,
)
from .parallel import map_ordered
from .ppp import ROOT_AT_ORIGIN, Sample, hardcore_thin, sample_annulus, sample_ball, condition_root
from .schemes import euler_defect
from .tess import (
    DelaunayComplex,
    core_margin,
    delaunay,
    dual_delaunay_graph,
    dual_voronoi_graph,
    triangle_star,
)

MAX_STRONG_K = 12
TAIL_START_R = 4.0
TAIL_STEP_R = 1.0
TAIL_EVENT_LIMIT = 1e-6
CI_LEVEL = 0.95


class VerifyError(ValueError):
    pass


@dataclass
class VerificationReport:
    name: str
    grid: list
    values: list
    ci: list
    bounds: list
    passed: list
    trials: int
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(self.passed)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=lambda x: x.item())


def _trial_seeds(seed: int, tag: int, count: int) -> np.ndarray:
    return rng.generator(seed, rng.MC, tag).integers(0, 2 ** 62, size=count)


def _binom_ci(events: int, trials: int) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    ci = stats.binomtest(int(events), int(trials)).proportion_ci(CI_LEVEL, method="exact")
    return float(ci.low), float(ci.high)


def _uniform_ball_z(u: np.ndarray, r: float) -> np.ndarray:
    """Poincare coordinates of points uniform (area measure) in B(0, r) from uniforms of shape (n, 2)."""
    rad = np.arccosh(1.0 + u[:, 0] * (math.cosh(r) - 1.0))
    return np.tanh(0.5 * rad) * np.exp(2j * math.pi * u[:, 1])


# -- triangle tail -------------------------------------------------------------------


def tail_exponent(lam: float, r: float) -> float:
    """3r/4 - lam*pi*e^(r/4): log of the constant-free tail bound."""
    return 0.75 * r - lam * math.pi * math.exp(0.25 * r)


def _root_link_closed(c: DelaunayComplex, tris: Sequence[int]) -> bool:
    cnt: dict[int, int] = {}
    for t in tris:
        for v in c.triangles[t]:
            if v != 0:
                cnt[int(v)] = cnt.get(int(v), 0) + 1
    return bool(cnt) and all(k == 2 for k in cnt.values())


def certified_star_radius(lam: float, seed: int, r0: float = TAIL_START_R,
                          step: float = TAIL_STEP_R) -> tuple[float, float]:
    """Star radius of the origin in the process on the whole plane.

    The window grows by independent annuli until the star around the
    origin is closed and every circumdisk in it lies inside the window;
    outside points cannot then change it.  Returns (radius, window used).
    """
    s = condition_root(sample_ball(lam, r0, seed))
    rad, theta, R = s.rad, s.theta, r0
    while True:
        cur = Sample(float(lam), float(R), int(seed), ROOT_AT_ORIGIN, rad, theta)
        c = delaunay(cur, core_margin_h=0.0)
        star = triangle_star(c, 0)
        ts = list(star.triangles)
        if ts and _root_link_closed(c, ts):
            reach = np.abs(c.centers_e[ts]) + c.radii_e[ts]
            if np.all(reach <= math.tanh(0.5 * R)):
                return star.radius, R
        if R + step > RAD_CAP:
            raise VerifyError(f"star of seed {seed} not certified within RAD_CAP")
        ar, at = sample_annulus(lam, R, R + step, seed)
        rad, theta = np.concatenate([rad, ar]), np.concatenate([theta, at])
        R += step


def tail_triangle(lam: float, r_grid: Sequence[float], trials: int, seed: int,
                  threads: Optional[int] = None) -> VerificationReport:
    """Empirical P[S_0 not inside B(0, r)] for the Delaunay star S_0 of the origin.

    A grid point passes when the estimate is strictly below the previous
    one and, where the constant-free bound is under TAIL_EVENT_LIMIT, no
    event was observed.
    """
    grid = [float(r) for r in r_grid]
    if not grid or max(grid) > RAD_CAP:
        raise VerifyError(f"r_grid={r_grid!r} must be nonempty with values <= {RAD_CAP}")
    seeds = _trial_seeds(seed, 1, trials)
    radii = np.array(map_ordered(lambda sd: certified_star_radius(lam, int(sd))[0], seeds, threads))
    events = [int(np.count_nonzero(radii > r)) for r in grid]
    p = [e / trials for e in events]
    bounds = [math.exp(tail_exponent(lam, r)) for r in grid]
    passed = []
    for i, r in enumerate(grid):
        ok = i == 0 or p[i] < p[i - 1]
        if bounds[i] < TAIL_EVENT_LIMIT:
            ok = events[i] == 0
        passed.append(bool(ok))
    pos = [i for i in range(len(grid)) if events[i] > 0]
    slope = None
    if len(pos) >= 2:
        xs = np.array([tail_exponent(lam, grid[i]) for i in pos])
        ys = np.log(np.array([p[i] for i in pos]))
        slope = float(np.polyfit(xs, ys, 1)[0])
    return VerificationReport("tail_triangle", grid, p, [_binom_ci(e, trials) for e in events], bounds,
                              passed, int(trials), int(seed),
                              {"lambda": lam, "events": events, "log_slope_vs_exponent": slope,
                               "max_star_radius": float(radii.max()) if trials else 0.0})


# -- region estimate -------------------------------------------------------------------


@dataclass(frozen=True)
class RegionEstimate:
    p: float
    ci: tuple[float, float]
    ratio: float
    ratio_ci: tuple[float, float]
    trials: int
    hits: int


def geometry_region(x_e: float, theta: float, window_r: float, trials: int, seed: int) -> RegionEstimate:
    """P[area(0, x, z) <= theta and the circumdisk exists] for z uniform in B(0, window_r).

    z is drawn uniformly (Euclidean) from the strip |Im z| <= h in which
    every triangle with area at most theta must lie, and weighted by the
    hyperbolic density, which gives an unbiased estimate with far fewer
    wasted draws than direct sampling.  The ratio is p*d(0,x)*|B|/theta.
    """
    if not (0.0 < x_e < 1.0):
        raise VerifyError(f"x_e={x_e!r} must be in (0, 1)")
    if not (theta >= 0.0):
        raise VerifyError(f"theta={theta!r} must be >= 0")
    if trials < 1:
        raise VerifyError(f"trials={trials!r} must be >= 1")
    vol = ball_area(window_r)
    d = 2.0 * math.atanh(x_e)
    if theta == 0.0:
        return RegionEstimate(0.0, (0.0, 0.0), 0.0, (0.0, 0.0), int(trials), 0)
    e_w = math.tanh(0.5 * window_r)
    # points above the locus ray for theta have larger area
    h = e_w if theta >= math.pi else min(e_w, (1.0 + 1.0 / x_e) * math.tan(0.5 * theta))
    box = 4.0 * e_w * h
    key = (rng.float_key(x_e), rng.float_key(theta), rng.float_key(window_r))
    total = 0.0
    total2 = 0.0
    hits = 0
    chunk = 1 << 18
    for start in range(0, trials, chunk):
        m = min(chunk, trials - start)
        u = rng.uniforms(seed, rng.MC, start, m, 2, key)
        z = (2.0 * u[:, 0] - 1.0) * e_w + 1j * (2.0 * u[:, 1] - 1.0) * h
        a2 = np.abs(z) ** 2
        inside = np.sqrt(a2) < e_w
        zero = np.zeros(m, dtype=complex)
        xs = np.full(m, complex(x_e, 0.0))
        area = triangle_area_many(zero, xs, z)
        ce, re, deg = euclid_circumcircle_many(zero, xs, z)
        hit = inside & (area <= theta) & ~deg & (np.abs(ce) + re < 1.0 - EPS_BOUNDARY)
        w = np.where(hit, 4.0 / np.where(inside, 1.0 - a2, 1.0) ** 2, 0.0) * (box / vol)
        total += float(w.sum())
        total2 += float((w * w).sum())
        hits += int(hit.sum())
    p = total / trials
    var = max(total2 / trials - p * p, 0.0)
    half = float(stats.norm.ppf(0.5 + CI_LEVEL / 2)) * math.sqrt(var / trials)
    ci = (max(p - half, 0.0), p + half)
    scale = d * vol / theta
    return RegionEstimate(p, ci, p * scale, (ci[0] * scale, ci[1] * scale), int(trials), hits)


def geometry_region_grid(x_grid: Sequence[float], theta_grid: Sequence[float], window_r: float,
                         trials: int, seed: int, constant: Optional[float] = None) -> VerificationReport:
    """Normalized ratios over a grid, each compared with a single constant."""
    grid, vals, cis, passed = [], [], [], []
    for x in x_grid:
        for th in theta_grid:
            est = geometry_region(float(x), float(th), window_r, trials, seed)
            grid.append([float(x), float(th)])
            vals.append(est.ratio)
            cis.append(list(est.ratio_ci))
            passed.append(constant is None or est.ratio <= constant)
    bound = [constant] * len(grid)
    return VerificationReport("geometry_region", grid, vals, cis, bound, passed, int(trials), int(seed),
                              {"window_r": window_r, "max_ratio": max(vals) if vals else 0.0})


# -- explicit formulas ----------------------------------------------------------------


def ray_circle(origin: complex, direction: complex, center: complex, radius: float) -> Optional[tuple[float, float]]:
    """Parameters t1 <= t2 where origin + t*direction meets the circle, or None."""
    d = direction / abs(direction)
    w = origin - center
    b = (np.conj(d) * w).real
    disc = b * b - (abs(w) ** 2 - radius * radius)
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    return (-b - sq, -b + sq)


def locus_ray(x_e: float, alpha: float) -> tuple[complex, complex]:
    """Start and unit direction of the ray from 1/x at angle alpha/2 above the negative real axis."""
    return complex(1.0 / x_e, 0.0), complex(math.cos(math.pi - 0.5 * alpha), math.sin(math.pi - 0.5 * alpha))


def locus_check(x_e: float, alpha: float, n_probe: int = 100) -> tuple[float, int]:
    """Largest |area(0, x, y) - alpha| over probes y on the locus ray inside the disk.

    Returns (max deviation, number of probes); zero probes when the ray
    misses the disk.
    """
    if not (0.0 < x_e < 1.0) or not (0.0 < alpha < math.pi):
        raise VerifyError(f"need 0 < x_e < 1 and 0 < alpha < pi, got {x_e}, {alpha}")
    o, d = locus_ray(x_e, alpha)
    hit = ray_circle(o, d, 0j, 1.0)
    if hit is None or hit[1] <= 0.0:
        return 0.0, 0
    t1, t2 = max(hit[0], 0.0), hit[1]
    zero, x = HPoint.origin(), HPoint.from_poincare(x_e, 0.0)
    worst = 0.0
    for j in range(n_probe):
        y = o + (t1 + (t2 - t1) * (j + 1) / (n_probe + 1)) * d
        worst = max(worst, abs(triangle_area(zero, x, HPoint.from_complex(y)) - alpha))
    return worst, n_probe


def horocycle(x_e: float) -> tuple[complex, float]:
    """Circle through 0 and x internally tangent to the unit circle, center in the upper half-plane.

    Found by root-finding on the tangency condition |c| + |c| = 1 for
    centers c = x/2 + ik on the perpendicular bisector of [0, x].
    """
    from scipy.optimize import brentq

    k = brentq(lambda k: 2.0 * math.hypot(0.5 * x_e, k) - 1.0, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
    c = complex(0.5 * x_e, k)
    return c, abs(c)


@dataclass(frozen=True)
class EllFormulas:
    closed: tuple[float, float]
    direct: tuple[float, float]

    @property
    def deviation(self) -> float:
        return max(abs(self.closed[0] - self.direct[0]), abs(self.closed[1] - self.direct[1]))


def ell_formulas(x_e: float, phi: float) -> EllFormulas:
    """l1, l2 along the ray at angle phi: closed forms and direct ray-circle intersections."""
    if not (0.0 < x_e < 1.0) or not (0.0 <= phi <= 0.5 * math.pi):
        raise VerifyError(f"need 0 < x_e < 1 and 0 <= phi <= pi/2, got {x_e}, {phi}")
    a1 = x_e * math.cos(phi)
    a2 = x_e * math.cos(phi) + math.sqrt(1.0 - x_e * x_e) * math.sin(phi)
    u = complex(math.cos(phi), math.sin(phi))
    f = ray_circle(0j, u, complex(0.5 * x_e, 0.0), 0.5 * x_e)
    hc, hr = horocycle(x_e)
    g = ray_circle(0j, u, hc, hr)
    if f is None or g is None:
        raise VerifyError("ray misses a circle through the origin")
    # both circles pass through the origin; the other crossing is the far root
    b1 = max(f[1], 0.0)
    b2 = max(g[1], 0.0)
    return EllFormulas((a1, a2), (b1, b2))


@dataclass(frozen=True)
class PhiStar:
    closed: float  # sin(2 phi*) from the quadratic formula
    direct: float  # sin(2 phi*) from the first crossing of the locus ray with F
    phi: float
    ratio: float  # sin(2 phi*) / (theta (1 - x))

    @property
    def deviation(self) -> float:
        return abs(self.closed - self.direct)


def phi_star_check(x_e: float, theta: float) -> PhiStar:
    """Angle at 0 of the first crossing w0 of the theta-locus ray with the circle on [0, x]."""
    if not (0.0 < x_e < 1.0) or not (theta > 0.0):
        raise VerifyError(f"need 0 < x_e < 1 and theta > 0, got {x_e}, {theta}")
    zq = (2.0 - x_e * x_e) / (x_e * x_e)
    s, c = math.sin(0.5 * theta), math.cos(0.5 * theta)
    disc = 1.0 - zq * zq * s * s
    o, d = locus_ray(x_e, theta)
    hit = ray_circle(o, d, complex(0.5 * x_e, 0.0), 0.5 * x_e)
    if disc <= 0.0 or hit is None or hit[0] == hit[1]:
        raise VerifyError(f"theta={theta} too large: the locus ray does not cross the circle twice")
    closed = s * (zq * c - math.sqrt(disc))
    w0 = o + hit[0] * d
    phi = abs(math.atan2(w0.imag, w0.real))
    direct = math.sin(2.0 * phi)
    return PhiStar(closed, direct, phi, direct / (theta * (1.0 - x_e)))


# -- convex hulls --------------------------------------------------------------------


def hull_ratio(points: Sequence[HPoint]) -> float:
    """Vol(conv S) / (4 pi |S|)."""
    if len(points) < 1:
        raise VerifyError("empty point set")
    hull = convex_hull_h(points)
    area = polygon_area_h(hull) if len(hull) >= 3 else 0.0
    return area / (4.0 * math.pi * len(points))


def hull_bound(point_sets: Sequence[Sequence[HPoint]]) -> float:
    """Worst hull ratio over the given sets."""
    return max((hull_ratio(ps) for ps in point_sets), default=0.0)


def random_point_sets(trials: int, seed: int, sizes: tuple[int, int] = (3, 100),
                      r_max: float = 8.0) -> Iterator[tuple[float, list[HPoint]]]:
    """(window radius, points) with uniform sizes and windows, points uniform in the window."""
    g = rng.generator(seed, rng.MC, 2)
    for _ in range(trials):
        n = int(g.integers(sizes[0], sizes[1] + 1))
        r = float(g.uniform(0.5, r_max))
        z = _uniform_ball_z(g.random((n, 2)), r)
        yield r, [HPoint.from_complex(complex(w)) for w in z]


def hull_bound_random(trials: int, seed: int, sizes: tuple[int, int] = (3, 100),
                      r_max: float = 8.0) -> VerificationReport:
    grid, vals, bounds, passed = [], [], [], []
    for r, pts in random_point_sets(trials, seed, sizes, r_max):
        ratio = hull_ratio(pts)
        grid.append([len(pts), r])
        vals.append(ratio)
        bounds.append(1.0)
        passed.append(ratio <= 1.0)
    return VerificationReport("hull_bound", grid, vals, [None] * len(vals), bounds, passed,
                              int(trials), int(seed), {"worst": max(vals, default=0.0)})


# -- strongly connected triangle collections ----------------------------------------------


def _connected_subsets(g: DualGraph, root: int, k_max: int) -> Iterator[list[int]]:
    """Connected core vertex sets containing root, each once, by extension sets."""
    S = [root]
    seen = {root}

    def rec(ext: list[int]) -> Iterator[list[int]]:
        yield S
        if len(S) == k_max:
            return
        ext = list(ext)
        while ext:
            # a popped vertex stays seen, so later siblings never re-add it
            v = ext.pop()
            S.append(v)
            new = []
            for w in g.indices[g.indptr[v]:g.indptr[v + 1]]:
                w = int(w)
                if w in seen or not g.core[w]:
                    continue
                seen.add(w)
                new.append(w)
            yield from rec(ext + new)
            for w in new:
                seen.discard(w)
            S.pop()

    first = []
    for w in g.indices[g.indptr[root]:g.indptr[root + 1]]:
        w = int(w)
        if g.core[w] and w not in seen:
            seen.add(w)
            first.append(w)
    yield from rec(first)


@dataclass
class StrongAreaReport:
    k_max: int
    per_size_min_mean: list  # None where no simply connected set of that size exists
    per_size_count: list[int]
    root_area: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def strong_area_scan(c: DelaunayComplex, k_max: int = 8, root: Optional[int] = None) -> StrongAreaReport:
    """min over simply connected, strongly connected collections of k triangles with the root of (sum area)/k."""
    if k_max > MAX_STRONG_K:
        raise GuardError(f"k_max={k_max} exceeds the guard {MAX_STRONG_K}")
    if k_max < 1:
        raise VerifyError(f"k_max={k_max} must be >= 1")
    g = dual_delaunay_graph(c, root)
    z = c.sample.z
    T = c.triangles
    area = triangle_area_many(z[T[:, 0]], z[T[:, 1]], z[T[:, 2]])
    best: list[Optional[float]] = [None] * k_max
    counts = [0] * k_max
    if not g.core[g.root]:
        return StrongAreaReport(k_max, best, counts, float(area[g.root]))
    for S in _connected_subsets(g, g.root, k_max):
        k = len(S)
        if euler_defect([tuple(T[t]) for t in S]) != 0:
            continue
        counts[k - 1] += 1
        m = float(area[S].sum()) / k
        if best[k - 1] is None or m < best[k - 1]:
            best[k - 1] = m
    return StrongAreaReport(k_max, best, counts, float(area[g.root]))


# -- distances and deviations -------------------------------------------------------------


def distance_compare(g: DualGraph) -> dict[int, float]:
    """Per annulus [r, r+1): min over core nuclei of d_G(root, x) / d_H(0, x)."""
    if g.geometry is None:
        raise GraphError("graph carries no geometry")
    d_g = bfs_distances(g, g.root)
    rad = g.geometry[:, 0]
    out: dict[int, float] = {}
    ok = g.core & (d_g > 0) & (rad > 0)
    for v in np.flatnonzero(ok):
        a = int(math.floor(rad[v]))
        ratio = float(d_g[v]) / float(rad[v])
        if a not in out or ratio < out[a]:
            out[a] = ratio
    return dict(sorted(out.items()))


def _bfs_path(g: DualGraph, a: int, b: int) -> list[int]:
    parent = {a: a}
    q = deque([a])
    while q:
        u = q.popleft()
        if u == b:
            break
        for w in g.indices[g.indptr[u]:g.indptr[u + 1]]:
            w = int(w)
            if w not in parent:
                parent[w] = u
                q.append(w)
    if b not in parent:
        raise GraphError(f"vertices {a} and {b} are not connected")
    path = [b]
    while path[-1] != a:
        path.append(parent[path[-1]])
    return path[::-1]


def cell_of(s: Sample, z: complex) -> int:
    """Nucleus whose Voronoi cell contains z (smallest index on ties)."""
    d = dist_h_many(np.full(len(s), z), s.z)
    return int(np.argmin(d))


def geodesic_deviation(c: DelaunayComplex, r: float) -> int:
    """Graph distance from the cell of 0 to a graph geodesic joining the cells of -r and r."""
    s = c.sample
    g = dual_voronoi_graph(c, root=cell_of(s, 0j))
    e = math.tanh(0.5 * r)
    a, b = cell_of(s, complex(-e, 0.0)), cell_of(s, complex(e, 0.0))
    for v, name in ((a, "-r"), (b, "r"), (g.root, "0")):
        if not g.core[v]:
            raise VerifyError(f"cell containing {name} is not in the core (r={r})")
    path = _bfs_path(g, a, b)
    d0 = bfs_distances(g, g.root)
    return int(min(d0[v] for v in path))


# -- separated point sets --------------------------------------------------------------------


def separated_expansion(lam: float, window_r: float, seed: int, m: int = 8, min_sep: float = 1.0):
    """Expansion scan of the Voronoi dual of a min_sep-thinned root-conditioned sample."""
    s = hardcore_thin(condition_root(sample_ball(lam, window_r, seed)), min_sep)
    c = delaunay(s)
    return min_expansion(dual_voronoi_graph(c), m=m)


__all__ = [
    "CI_LEVEL",
    "EllFormulas",
    "MAX_STRONG_K",
    "PhiStar",
    "RegionEstimate",
    "StrongAreaReport",
    "VerificationReport",
    "VerifyError",
    "cell_of",
    "certified_star_radius",
    "core_margin",
    "distance_compare",
    "ell_formulas",
    "geodesic_deviation",
    "geometry_region",
    "geometry_region_grid",
    "horocycle",
    "hull_bound",
    "hull_bound_random",
    "hull_ratio",
    "locus_check",
    "locus_ray",
    "phi_star_check",
    "random_point_sets",
    "ray_circle",
    "separated_expansion",
    "strong_area_scan",
    "tail_exponent",
    "tail_triangle",
]
