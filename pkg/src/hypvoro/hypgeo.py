"""Hyperbolic plane primitives in the Poincare disk, with Klein conversions.

Points carry polar coordinates (hyperbolic radius, angle) as the
authoritative representation and Poincare Cartesian coordinates derived
from them.  Scalar functions work on ``HPoint``; the ``*_many`` helpers
operate on numpy arrays of complex Poincare coordinates and are what the
tessellation code uses in bulk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

RAD_CAP = 25.0
# circumcircle must satisfy |c| + rho < 1 - EPS_BOUNDARY to count as a finite disk
EPS_BOUNDARY = 1e-12
# Euclidean triangle area below which a triple is treated as degenerate
COLLINEAR_AREA = 1e-16
TWO_PI = 2.0 * math.pi


class GuardError(ValueError):
    """A size or range guard was exceeded."""


class GeometryError(ValueError):
    """Raised on inputs outside the domain of a geometric operation."""


def _norm_angle(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


@dataclass(frozen=True)
class HPoint:
    """A point of the hyperbolic plane.

    ``rad_h`` is the hyperbolic distance to the origin and ``theta`` the
    polar angle in [0, 2pi).  ``re``/``im`` are the Poincare coordinates,
    always recomputed from the polar pair.
    """

    rad_h: float
    theta: float
    re: float = field(init=False, repr=False, compare=False)
    im: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = float(self.rad_h)
        if not (r >= 0.0):
            raise GeometryError(f"rad_h={self.rad_h!r} must be >= 0")
        if r > RAD_CAP:
            raise GuardError(f"rad_h={self.rad_h!r} exceeds RAD_CAP={RAD_CAP}")
        th = _norm_angle(float(self.theta)) if r > 0.0 else 0.0
        e = math.tanh(0.5 * r)
        object.__setattr__(self, "rad_h", r)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "re", e * math.cos(th))
        object.__setattr__(self, "im", e * math.sin(th))

    @classmethod
    def origin(cls) -> "HPoint":
        return cls(0.0, 0.0)

    @classmethod
    def from_poincare(cls, re: float, im: float) -> "HPoint":
        e = math.hypot(re, im)
        if e >= 1.0:
            raise GeometryError(f"Poincare point ({re}, {im}) not inside the unit disk")
        if e == 0.0:
            return cls(0.0, 0.0)
        return cls(2.0 * math.atanh(e), math.atan2(im, re))

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls.from_poincare(z.real, z.imag)

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    @property
    def one_minus_abs2(self) -> float:
        """1 - |z|^2 computed from the radius, accurate near the boundary."""
        c = math.cosh(0.5 * self.rad_h)
        return 1.0 / (c * c)


@dataclass(frozen=True)
class Geodesic:
    """Geodesic segment between two points.

    Either a diameter (``is_diameter``) or an arc of the Euclidean circle
    with ``center``/``radius`` orthogonal to the unit circle.
    """

    a: HPoint
    b: HPoint
    is_diameter: bool
    center: complex = 0j
    radius: float = math.inf


@dataclass(frozen=True)
class HDisk:
    center_h: HPoint
    radius_h: float
    center_e: complex
    radius_e: float

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        """Open-disk test on Poincare coordinates."""
        return abs(z - self.center_e) < self.radius_e - margin

    def boundary_points(self, n: int = 8) -> list[complex]:
        t = np.arange(n) * (TWO_PI / n)
        return list(self.center_e + self.radius_e * np.exp(1j * t))


def _arcosh1p(x: float) -> float:
    # arcosh(1 + x) without cancellation for small x
    return math.log1p(x + math.sqrt(x * (x + 2.0)))


def dist_h(p: HPoint, q: HPoint) -> float:
    """Hyperbolic distance between two points."""
    d2 = (p.re - q.re) ** 2 + (p.im - q.im) ** 2
    if d2 == 0.0:
        return 0.0
    return _arcosh1p(2.0 * d2 / (p.one_minus_abs2 * q.one_minus_abs2))


def dist_h_many(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    d2 = np.abs(z1 - z2) ** 2
    x = 2.0 * d2 / ((1.0 - np.abs(z1) ** 2) * (1.0 - np.abs(z2) ** 2))
    return np.log1p(x + np.sqrt(x * (x + 2.0)))


def ball_area(r: float) -> float:
    """Area of a hyperbolic ball of radius r, 2pi(cosh r - 1)."""
    if r < 0:
        raise GeometryError(f"r={r!r} must be >= 0")
    s = math.sinh(0.5 * r)
    return 4.0 * math.pi * s * s


def ball_circumference(r: float) -> float:
    return TWO_PI * math.sinh(r)


def radius_h_to_e(r: float) -> float:
    if r < 0:
        raise GeometryError(f"r={r!r} must be >= 0")
    return math.tanh(0.5 * r)


def radius_e_to_h(e: float) -> float:
    if not (0.0 <= e < 1.0):
        raise GeometryError(f"e={e!r} must lie in [0, 1)")
    return 2.0 * math.atanh(e)


# -- disk automorphisms -----------------------------------------------------


@dataclass(frozen=True)
class DiskAutomorphism:
    """z -> exp(i*rot) (z - a) / (1 - conj(a) z)."""

    a: complex = 0j
    rot: float = 0.0

    def __call__(self, z: complex) -> complex:
        w = (z - self.a) / (1.0 - self.a.conjugate() * z)
        if self.rot:
            w *= complex(math.cos(self.rot), math.sin(self.rot))
        return w

    def apply(self, p: HPoint) -> HPoint:
        return HPoint.from_complex(self(p.z))

    def apply_many(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        w = (z - self.a) / (1.0 - np.conj(self.a) * z)
        return w * np.exp(1j * self.rot)


def isometry_to_origin(p: HPoint) -> DiskAutomorphism:
    """Automorphism of the disk sending p to 0."""
    return DiskAutomorphism(p.z, 0.0)


# -- angles and areas -------------------------------------------------------


def _corner_angle(v: complex, a: complex, b: complex) -> float:
    # move v to 0: geodesics from 0 are diameters so the angle is Euclidean
    cv = v.conjugate()
    ta = (a - v) / (1.0 - cv * a)
    tb = (b - v) / (1.0 - cv * b)
    return abs(math.atan2((ta.conjugate() * tb).imag, (ta.conjugate() * tb).real))


def angle_at(v: HPoint, a: HPoint, b: HPoint) -> float:
    """Interior angle at v of the geodesic triangle (v, a, b)."""
    return _corner_angle(v.z, a.z, b.z)


def _euclid_area(a: complex, b: complex, c: complex) -> float:
    return 0.5 * abs((b - a).real * (c - a).imag - (b - a).imag * (c - a).real)


def triangle_area(a: HPoint, b: HPoint, c: HPoint) -> float:
    """Hyperbolic area of the geodesic triangle, by angle defect."""
    za, zb, zc = a.z, b.z, c.z
    if _euclid_area(za, zb, zc) < COLLINEAR_AREA:
        return 0.0
    s = _corner_angle(za, zb, zc) + _corner_angle(zb, zc, za) + _corner_angle(zc, za, zb)
    return min(max(math.pi - s, 0.0), math.pi)


def _corner_angle_many(v, a, b):
    cv = np.conj(v)
    ta = (a - v) / (1.0 - cv * a)
    tb = (b - v) / (1.0 - cv * b)
    return np.abs(np.angle(np.conj(ta) * tb))


def triangle_area_many(za, zb, zc) -> np.ndarray:
    za = np.asarray(za, dtype=complex)
    zb = np.asarray(zb, dtype=complex)
    zc = np.asarray(zc, dtype=complex)
    s = _corner_angle_many(za, zb, zc) + _corner_angle_many(zb, zc, za) + _corner_angle_many(zc, za, zb)
    area = np.clip(np.pi - s, 0.0, np.pi)
    e = 0.5 * np.abs((zb - za).real * (zc - za).imag - (zb - za).imag * (zc - za).real)
    return np.where(e < COLLINEAR_AREA, 0.0, area)


# -- circles ----------------------------------------------------------------


def euclid_circumcircle_many(za, zb, zc):
    """Euclidean circumcenters and radii of arrays of triangles.

    Returns (center, radius, degenerate) with degenerate triples flagged
    by Euclidean area below ``COLLINEAR_AREA``.
    """
    za = np.asarray(za, dtype=complex)
    b = np.asarray(zb, dtype=complex) - za
    c = np.asarray(zc, dtype=complex) - za
    cross = b.real * c.imag - b.imag * c.real
    degenerate = 0.5 * np.abs(cross) < COLLINEAR_AREA
    d = np.where(degenerate, 1.0, 2.0 * cross)
    b2 = b.real ** 2 + b.imag ** 2
    c2 = c.real ** 2 + c.imag ** 2
    ux = (c.imag * b2 - b.imag * c2) / d
    uy = (b.real * c2 - c.real * b2) / d
    rel = ux + 1j * uy
    return za + rel, np.abs(rel), degenerate


def hyperbolic_center(center_e: complex, radius_e: float) -> tuple[HPoint, float]:
    """Hyperbolic center and radius of a Euclidean circle inside the disk."""
    m = abs(center_e)
    t1 = m - radius_e
    t2 = m + radius_e
    s = math.atanh(t1) + math.atanh(t2)  # signed hyperbolic radius of the center
    rh = math.atanh(t2) - math.atanh(t1)
    if m == 0.0:
        return HPoint.origin(), rh
    theta = math.atan2(center_e.imag, center_e.real)
    if s < 0:
        s, theta = -s, theta + math.pi
    return HPoint(s, theta), rh


def circumdisk(a: HPoint, b: HPoint, c: HPoint) -> Optional[HDisk]:
    """Hyperbolic circumdisk of three points, or None when it is not finite."""
    ce, re, deg = euclid_circumcircle_many(np.array([a.z]), np.array([b.z]), np.array([c.z]))
    if deg[0]:
        return None
    ce, re = complex(ce[0]), float(re[0])
    if not (abs(ce) + re < 1.0 - EPS_BOUNDARY):
        return None
    ch, rh = hyperbolic_center(ce, re)
    return HDisk(ch, rh, ce, re)


def geodesic(a: HPoint, b: HPoint) -> Geodesic:
    """Geodesic segment from a to b."""
    za, zb = a.z, b.z
    cross = za.real * zb.imag - za.imag * zb.real
    if abs(cross) < 1e-15 * max(1.0, abs(za) * abs(zb)) or abs(za) < 1e-15 or abs(zb) < 1e-15:
        return Geodesic(a, b, True)
    # orthogonal circle: passes through za, zb and the inversion 1/conj(za)
    zi = 1.0 / za.conjugate()
    ce, re, _ = euclid_circumcircle_many(np.array([za]), np.array([zb]), np.array([zi]))
    return Geodesic(a, b, False, complex(ce[0]), float(re[0]))


# -- Klein model and polygons -----------------------------------------------


def to_klein(p: HPoint) -> complex:
    z = p.z
    return 2.0 * z / (1.0 + abs(z) ** 2)


def to_klein_many(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return 2.0 * z / (1.0 + np.abs(z) ** 2)


def from_klein(k: complex) -> HPoint:
    m2 = abs(k) ** 2
    if m2 >= 1.0:
        raise GeometryError(f"Klein point {k!r} not inside the unit disk")
    return HPoint.from_complex(k / (1.0 + math.sqrt(1.0 - m2)))


def from_klein_many(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=complex)
    return k / (1.0 + np.sqrt(1.0 - np.abs(k) ** 2))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_h(points: Sequence[HPoint]) -> list[HPoint]:
    """Hull vertices of the hyperbolic convex hull, counterclockwise.

    Geodesics are chords in the Klein model, so this is the Euclidean hull
    of the Klein images (monotone chain, collinear points dropped).
    """
    if not points:
        raise GeometryError("convex hull of an empty set")
    keyed = {}
    for p in points:
        k = to_klein(p)
        keyed.setdefault((k.real, k.imag), p)
    pts = sorted(keyed)
    if len(pts) <= 2:
        return [keyed[k] for k in pts]
    lower: list = []
    for q in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], q) <= 0:
            lower.pop()
        lower.append(q)
    upper: list = []
    for q in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], q) <= 0:
            upper.pop()
        upper.append(q)
    hull = lower[:-1] + upper[:-1]
    return [keyed[k] for k in hull]


def _segments_cross(p1, p2, p3, p4) -> bool:
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 < 0 and d3 * d4 < 0


def polygon_area_h(vertices: Sequence[HPoint]) -> float:
    """Area of a simple geodesic polygon, (n-2)pi minus the interior angles."""
    n = len(vertices)
    if n < 3:
        return 0.0
    ks = [to_klein(v) for v in vertices]
    kp = [(k.real, k.imag) for k in ks]
    signed = 0.0
    for i in range(n):
        x0, y0 = kp[i]
        x1, y1 = kp[(i + 1) % n]
        signed += x0 * y1 - x1 * y0
    if abs(0.5 * signed) < COLLINEAR_AREA:
        return 0.0
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(kp[i], kp[(i + 1) % n], kp[j], kp[(j + 1) % n]):
                raise GeometryError("polygon is self-intersecting")
    orient = 1.0 if signed > 0 else -1.0
    zs = [v.z for v in vertices]
    total = 0.0
    for i in range(n):
        v = zs[i]
        prev_ = zs[i - 1]
        next_ = zs[(i + 1) % n]
        cv = v.conjugate()
        tp = (prev_ - v) / (1.0 - cv * prev_)
        tn = (next_ - v) / (1.0 - cv * next_)
        # counterclockwise sweep from the outgoing to the incoming direction
        ang = math.atan2(orient * (tn.conjugate() * tp).imag, (tn.conjugate() * tp).real)
        if ang < 0:
            ang += TWO_PI
        total += ang
    return max((n - 2) * math.pi - total, 0.0)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


def geodesic_form_integral(u: complex, v: complex) -> float:
    """Integral of the area 1-form 2(x dy - y dx)/(1 - |z|^2) along [u, v].

    The geodesic is parameterized by hyperbolic arclength after moving u to
    the origin.  Summing this over the edges of a closed counterclockwise
    boundary (together with ``circle_form_integral`` for arcs about the
    origin) gives the enclosed hyperbolic area.
    """
    if u == v:
        return 0.0
    cu = u.conjugate()
    w = (v - u) / (1.0 - cu * v)
    d = 2.0 * math.atanh(min(abs(w), 1.0 - 1e-17))
    direction = w / abs(w)
    nseg = max(1, int(math.ceil(d / 1.5)))
    total = 0.0
    for k in range(nseg):
        a = d * k / nseg
        b = d * (k + 1) / nseg
        tau = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
        zeta = np.tanh(0.5 * tau) * direction
        dzeta = 0.5 / np.cosh(0.5 * tau) ** 2 * direction
        den = 1.0 + cu * zeta
        z = (zeta + u) / den
        dz = dzeta * (1.0 - abs(u) ** 2) / den ** 2
        f = 2.0 * np.imag(np.conj(z) * dz) / (1.0 - np.abs(z) ** 2)
        total += 0.5 * (b - a) * float(np.dot(_GL_W, f))
    return total


def circle_form_integral(e: float, phi0: float, phi1: float) -> float:
    """Integral of the area 1-form along the circle |z| = e from phi0 to phi1."""
    return 2.0 * e * e / (1.0 - e * e) * (phi1 - phi0)
