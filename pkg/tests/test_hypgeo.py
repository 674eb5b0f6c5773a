import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import integrate

from hypvoro.hypgeo import (
    RAD_CAP,
    GeometryError,
    GuardError,
    HPoint,
    angle_at,
    ball_area,
    ball_circumference,
    circumdisk,
    convex_hull_h,
    dist_h,
    dist_h_many,
    euclid_circumcircle_many,
    from_klein,
    isometry_to_origin,
    polygon_area_h,
    radius_e_to_h,
    radius_h_to_e,
    to_klein,
    triangle_area,
    triangle_area_many,
)

# quadrature of the metric density 2/(1-t^2) along the real diameter
DIST_0_HALF = 1.0986122886681096
DIST_PM03 = 1.238078416812447
# quadrature of 2*pi*sinh over [0, r]
BALL_AREA = {1: 3.412276265284902, 2: 17.355387381771436, 3: 56.973800622341585}
# quadrature of the Klein area density over the equilateral triangle with Poincare vertex radius 0.9
EQUILATERAL_09 = 2.7784019172812062


def P(z):
    return HPoint.from_complex(complex(z))


disk = st.builds(lambda r, t: cmath.rect(r, t), st.floats(0.0, 0.95), st.floats(0.0, 2 * math.pi))


def test_hpoint_coordinates_consistent():
    p = HPoint(2.0, 0.7)
    e = math.tanh(1.0)
    assert abs(p.z.real - e * math.cos(0.7)) < 1e-12
    assert abs(p.z.imag - e * math.sin(0.7)) < 1e-12
    assert abs(p.z) < 1


def test_hpoint_guard():
    with pytest.raises(GuardError):
        HPoint(RAD_CAP + 1.0, 0.0)
    with pytest.raises(GeometryError):
        HPoint.from_poincare(1.0, 0.0)


def test_dist_examples():
    assert dist_h(HPoint.origin(), HPoint.origin()) == 0.0
    assert abs(dist_h(P(0), P(0.5)) - DIST_0_HALF) < 1e-12
    assert abs(dist_h(P(0), P(0.5)) - math.log(3)) < 1e-12
    assert abs(dist_h(P(0.3), P(-0.3)) - DIST_PM03) < 1e-12


def test_dist_matches_quadrature_on_radius():
    for e in [0.1, 0.7, 0.99]:
        q = integrate.quad(lambda t: 2 / (1 - t * t), 0, e)[0]
        assert abs(dist_h(P(0), P(e)) - q) < 1e-9


@given(disk, disk, disk)
def test_dist_metric(a, b, c):
    pa, pb, pc = P(a), P(b), P(c)
    assert abs(dist_h(pa, pb) - dist_h(pb, pa)) < 1e-9
    assert dist_h(pa, pc) <= dist_h(pa, pb) + dist_h(pb, pc) + 1e-9


@given(disk, disk)
def test_dist_many_matches_scalar(a, b):
    assert abs(dist_h_many(np.array([a]), np.array([b]))[0] - dist_h(P(a), P(b))) < 1e-9


def test_ball_area():
    assert ball_area(0) == 0.0
    for r, v in BALL_AREA.items():
        assert abs(ball_area(r) - v) < 1e-9
    assert abs(ball_circumference(1.0) - 2 * math.pi * math.sinh(1.0)) < 1e-12


def test_radius_conversion():
    assert radius_h_to_e(0.0) == 0.0
    assert abs(radius_e_to_h(0.9995) - 8.294) < 1e-3
    assert abs(radius_e_to_h(radius_h_to_e(5.0)) - 5.0) < 1e-12


def test_triangle_area_examples():
    assert triangle_area(P(-0.5), P(0.1), P(0.6)) == 0.0
    eq = [P(0.9 * cmath.exp(2j * math.pi * j / 3)) for j in range(3)]
    assert abs(triangle_area(*eq) - EQUILATERAL_09) < 1e-3


@given(disk, disk, disk)
def test_triangle_area_bounds_and_vectorized(a, b, c):
    v = triangle_area(P(a), P(b), P(c))
    assert 0.0 <= v < math.pi
    w = triangle_area_many(np.array([a]), np.array([b]), np.array([c]))[0]
    assert abs(v - w) < 1e-9


@given(disk, disk, disk)
def test_area_is_angle_defect(a, b, c):
    pa, pb, pc = P(a), P(b), P(c)
    assume(abs(((b - a).conjugate() * (c - a)).imag) > 1e-6)
    s = angle_at(pa, pb, pc) + angle_at(pb, pc, pa) + angle_at(pc, pa, pb)
    assert abs(triangle_area(pa, pb, pc) - max(math.pi - s, 0.0)) < 1e-9


def test_circumdisk_examples():
    d = circumdisk(P(0.1), P(-0.1), P(0.1j))
    assert d is not None
    assert abs(d.center_e) < 1e-12 and abs(d.radius_e - 0.1) < 1e-12
    assert circumdisk(P(-0.5), P(0.0), P(0.5)) is None
    assert circumdisk(P(-0.9 + 0.01j), P(0.012j), P(0.9 + 0.01j)) is None


@given(disk, disk, disk)
def test_circumdisk_equidistant(a, b, c):
    d = circumdisk(P(a), P(b), P(c))
    if d is None:
        return
    rs = [dist_h(d.center_h, P(z)) for z in (a, b, c)]
    assert max(rs) - min(rs) < 1e-6 * max(1.0, rs[0])
    assert abs(rs[0] - d.radius_h) < 1e-6 * max(1.0, rs[0])


def test_circumcircle_many_degenerate_flag():
    ce, re, deg = euclid_circumcircle_many(np.array([0j]), np.array([0.5 + 0j]), np.array([-0.5 + 0j]))
    assert deg[0]


def test_klein():
    assert to_klein(P(0)) == 0
    assert abs(to_klein(P(0.5)) - 0.8) < 1e-15


@given(disk)
def test_klein_round_trip(z):
    assert abs(from_klein(to_klein(P(z))).z - z) < 1e-12


def _interior(k, others):
    # inside some triangle of the other points (Klein chords are geodesics)
    def cross(o, a, b):
        return (a - o).real * (b - o).imag - (a - o).imag * (b - o).real
    for i in range(len(others)):
        for j in range(i + 1, len(others)):
            for m in range(j + 1, len(others)):
                a, b, c = others[i], others[j], others[m]
                s = [cross(a, b, k), cross(b, c, k), cross(c, a, k)]
                if all(x > 0 for x in s) or all(x < 0 for x in s):
                    return True
    return False


def test_convex_hull_examples():
    assert [p.z for p in convex_hull_h([P(0.3)])] == [P(0.3).z]
    tri = [P(0.5), P(0.5j), P(-0.4 - 0.2j)]
    assert {p.z for p in convex_hull_h(tri)} == {p.z for p in tri}
    outer = [P(0.8 * cmath.exp(2j * math.pi * j / 6)) for j in range(6)]
    inner = [P(0.1), P(-0.2j), P(0.15 + 0.15j), P(-0.3)]
    pts = outer + inner
    ks = [to_klein(p) for p in pts]
    expected = {i for i in range(10) if not _interior(ks[i], ks[:i] + ks[i + 1:])}
    assert expected == set(range(6))
    assert {p.z for p in convex_hull_h(pts)} == {p.z for p in outer}


@given(st.lists(disk, min_size=1, max_size=25))
def test_convex_hull_against_brute_force(zs):
    pts = [P(z) for z in zs]
    hull = {p.z for p in convex_hull_h(pts)}
    ks = [to_klein(p) for p in pts]
    for i, p in enumerate(pts):
        if p.z in hull:
            continue
        others = ks[:i] + ks[i + 1:]
        # a dropped point is inside the hull of the rest, or duplicates / lies on its boundary
        assert _interior(ks[i], others) or _on_hull_boundary(ks[i], [to_klein(q) for q in convex_hull_h(pts)])


def _on_hull_boundary(k, hull):
    if len(hull) < 3:
        return True
    for a, b in zip(hull, hull[1:] + hull[:1]):
        cr = (b - a).real * (k - a).imag - (b - a).imag * (k - a).real
        if abs(cr) < 1e-9 and min(a.real, b.real) - 1e-9 <= k.real <= max(a.real, b.real) + 1e-9:
            return True
    return abs(k - hull[0]) < 1e-12


def test_polygon_area_examples():
    a, b, c = P(0.2), P(0.5j), P(-0.6 - 0.1j)
    assert abs(polygon_area_h([a, b, c]) - triangle_area(a, b, c)) < 1e-10
    assert polygon_area_h([a, b]) == 0.0


@given(st.floats(0.1, 0.9), st.floats(0.0, 1.0))
def test_hexagon_two_fans(rad, rot):
    hexa = [P(rad * cmath.exp(1j * (rot + 2 * math.pi * j / 6 + 0.2 * math.sin(j)))) for j in range(6)]
    fan0 = sum(triangle_area(hexa[0], hexa[i], hexa[i + 1]) for i in range(1, 5))
    fan3 = sum(triangle_area(hexa[3], hexa[(3 + i) % 6], hexa[(4 + i) % 6]) for i in range(1, 5))
    assert abs(fan0 - fan3) < 1e-9
    assert abs(polygon_area_h(hexa) - fan0) < 1e-9


def test_isometry_examples():
    f = isometry_to_origin(HPoint.origin())
    q = P(0.3 + 0.4j)
    assert abs(f.apply(q).z - q.z) < 1e-15
    p = P(0.6 - 0.2j)
    assert abs(isometry_to_origin(p).apply(p).z) < 1e-12


@given(disk, disk, disk)
def test_isometry_preserves_distance(p, q, r):
    f = isometry_to_origin(P(p))
    assert abs(dist_h(f.apply(P(q)), f.apply(P(r))) - dist_h(P(q), P(r))) < 1e-8
