"""Hyperbolic Delaunay complex and Voronoi cells over a window sample.

Hyperbolic circles are Euclidean circles in the Poincare disk, so the
hyperbolic Delaunay triangles are the Euclidean Delaunay triangles of the
Poincare coordinates whose circumcircle stays inside the unit disk.  An
edge can be hyperbolic Delaunay without any valid incident triangle; such
edges are validated by an explicit witness disk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Optional

import numpy as np
import triangle
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .graph import DELAUNAY_DUAL, VORONOI_DUAL, DualGraph, GraphError, GuardError
from .hypgeo import (
    EPS_BOUNDARY,
    TWO_PI,
    HDisk,
    circle_form_integral,
    dist_h_many,
    euclid_circumcircle_many,
    from_klein_many,
    geodesic_form_integral,
    hyperbolic_center,
    radius_h_to_e,
    to_klein_many,
)
from .ppp import ROOT_AT_ORIGIN, Sample

BRUTE_MAX_N = 200
# tail probability that the default core margin is built for
CORE_TAIL = 1e-6
# bisection steps for the witness search along the bisector
WITNESS_STEPS = 64
# radius tolerance for points lying on a circumcircle
COCIRCULAR_TOL = 1e-12  # relative to the Euclidean circumradius


class TessError(ValueError):
    pass


def core_margin(lam: float, tail: float = CORE_TAIL) -> float:
    """Smallest m >= 0 with exp(3m/4 - lam*pi*e^(m/4)) < tail."""
    if not (lam > 0):
        raise TessError(f"lambda={lam!r} must be > 0 for a core margin")
    target = math.log(tail)

    def g(m):
        return 0.75 * m - lam * math.pi * math.exp(0.25 * m) - target

    if g(0.0) < 0:
        return 0.0
    # g rises to its peak then decreases; the first crossing lies past the peak
    lo = max(0.0, 4.0 * math.log(3.0 / (lam * math.pi)))
    hi = lo + 1.0
    while g(hi) >= 0:
        hi = 2.0 * hi + 1.0
    return float(brentq(g, lo, hi, xtol=1e-14, rtol=1e-15))


@dataclass(eq=False)
class DelaunayComplex:
    """Triangles, edges and core flags over a sample.

    ``triangle_adjacency[t, j]`` is the triangle across the edge opposite
    ``triangles[t, j]`` (-1 when absent).  ``edges`` holds every candidate
    edge of the Euclidean triangulation; ``edge_valid`` marks the
    hyperbolic Delaunay edges.
    """

    sample: Sample
    triangles: np.ndarray
    triangle_adjacency: np.ndarray
    edges: np.ndarray
    edge_valid: np.ndarray
    centers_e: np.ndarray
    radii_e: np.ndarray
    core_margin: float
    vertex_core: np.ndarray
    triangle_core: np.ndarray
    unresolved: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    meta: dict = field(default_factory=dict)

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def valid_edges(self) -> np.ndarray:
        return self.edges[self.edge_valid]

    @cached_property
    def circumdisks(self) -> list[HDisk]:
        out = []
        for c, r in zip(self.centers_e.tolist(), self.radii_e.tolist()):
            ch, rh = hyperbolic_center(c, r)
            out.append(HDisk(ch, rh, c, r))
        return out

    @cached_property
    def centers_h(self) -> np.ndarray:
        """Hyperbolic circumcenters as rows [rad_h, theta]."""
        rad, theta, _ = hyperbolic_centers_many(self.centers_e, self.radii_e)
        return np.column_stack([rad, theta])

    @cached_property
    def vertex_triangles(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR (indptr, triangle ids) of the triangles incident to each vertex."""
        n = len(self.sample)
        flat = self.triangles.ravel()
        tid = np.repeat(np.arange(self.n_triangles), 3)
        order = np.argsort(flat, kind="stable")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, flat + 1, 1)
        return np.cumsum(indptr), tid[order]

    def triangle_set(self) -> set[tuple[int, int, int]]:
        return {tuple(t) for t in self.triangles.tolist()}


# -- shared predicates --------------------------------------------------------


def _fan_triangles(group: list[int], z: np.ndarray, center: complex) -> list[tuple[int, int, int]]:
    """Deterministic triangulation of cocircular points: a fan from the lowest index."""
    ang = {i: math.atan2((z[i] - center).imag, (z[i] - center).real) for i in group}
    ring = sorted(group, key=lambda i: ang[i])
    apex = min(group)
    k = ring.index(apex)
    ring = ring[k:] + ring[:k]
    return [tuple(sorted((apex, ring[j], ring[j + 1]))) for j in range(1, len(ring) - 1)]


def _edge_frame(zp: np.ndarray, zq: np.ndarray):
    """Midpoint, unit left normal of p->q and half chord length."""
    m = 0.5 * (zp + zq)
    d = zq - zp
    h = 0.5 * np.abs(d)
    nrm = 1j * d / np.abs(d)
    return m, nrm, h


def _witness_min_closed(m, nrm, h, a, b):
    """min over t in [a, b] of |m + t n| + sqrt(h^2 + t^2), closed form."""
    u = np.abs((m * np.conj(1j * nrm)).real)  # component along the chord
    v = (m * np.conj(nrm)).real
    t_star = -v * h / (u + h)
    t = np.clip(t_star, a, b)
    return np.abs(m + t * nrm) + np.sqrt(h * h + t * t)


def _witness_min_bisect(m, nrm, h, a, b, steps=WITNESS_STEPS):
    """Same minimum by bisection on the derivative of the convex objective."""
    def deriv(t):
        c = m + t * nrm
        ac = np.abs(c)
        dc = np.where(ac > 0, (c * np.conj(nrm)).real / np.where(ac > 0, ac, 1.0), 0.0)
        return dc + t / np.sqrt(h * h + t * t)

    lo = np.asarray(a, dtype=float).copy()
    hi = np.asarray(b, dtype=float).copy()
    at_lo = deriv(lo) >= 0
    at_hi = deriv(hi) <= 0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        pos = deriv(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    t = np.where(at_lo, a, np.where(at_hi, b, 0.5 * (lo + hi)))
    return np.abs(m + t * nrm) + np.sqrt(h * h + t * t)


# -- construction -------------------------------------------------------------


def _incircle(z: np.ndarray, a, b, c, d):
    """Signed in-circle value of d against triangle (a, b, c) and its magnitude scale.

    Positive when d lies strictly inside the circumcircle.  Coordinates are
    taken relative to d so nearby points near the disk boundary keep their
    relative precision.
    """
    A = z[a] - z[d]
    B = z[b] - z[d]
    C = z[c] - z[d]

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    a2, b2, c2 = np.abs(A) ** 2, np.abs(B) ** 2, np.abs(C) ** 2
    t1, t2, t3 = a2 * cross(B, C), b2 * cross(C, A), c2 * cross(A, B)
    orient = np.sign(cross(B - A, C - A))
    return orient * (t1 + t2 + t3), np.abs(t1) + np.abs(t2) + np.abs(t3)


def _bad_edges(z: np.ndarray, simp: np.ndarray, nbr: np.ndarray, tol: float, chunk: int = 1 << 19):
    """(triangle, slot) pairs whose opposite neighbor vertex is inside the circumcircle."""
    out_t, out_j = [], []
    T = simp.shape[0]
    for start in range(0, T, chunk):
        sl = slice(start, min(T, start + chunk))
        for j in range(3):
            u = nbr[sl, j]
            has = np.flatnonzero(u >= 0)
            if len(has) == 0:
                continue
            tt = has + start
            a = simp[tt, j]
            b = simp[tt, (j + 1) % 3]
            c = simp[tt, (j + 2) % 3]
            d = simp[u[has]].sum(axis=1) - b - c
            val, scale = _incircle(z, a, b, c, d)
            bad = val > tol * scale
            out_t.append(tt[bad])
            out_j.append(np.full(int(bad.sum()), j))
    if not out_t:
        return []
    return list(zip(np.concatenate(out_t).tolist(), np.concatenate(out_j).tolist()))


def _legalize(z: np.ndarray, simp: np.ndarray, nbr: np.ndarray, tol: float = 1e-11) -> int:
    """Lawson flips until no interior edge is locally non-Delaunay.

    A guard for triangulations produced under roundoff; with exact
    predicates upstream it normally flips nothing.  Works in place and
    returns the flip count.
    """
    queue = _bad_edges(z, simp, nbr, tol)
    flips = 0
    limit = 10 * len(queue) + 1000
    while queue:
        t, j = queue.pop()
        u = int(nbr[t, j])
        if u < 0:
            continue
        av, bv, cv = int(simp[t, j]), int(simp[t, (j + 1) % 3]), int(simp[t, (j + 2) % 3])
        tri_u = [int(x) for x in simp[u]]
        if bv not in tri_u or cv not in tri_u:
            continue
        dv = sum(tri_u) - bv - cv
        v, sc = _incircle(z, np.array([av]), np.array([bv]), np.array([cv]), np.array([dv]))
        if not v[0] > tol * sc[0]:
            continue
        flips += 1
        if flips > limit:
            raise TessError("edge flipping did not converge")
        ti = [int(x) for x in simp[t]]
        n_ac = int(nbr[t, ti.index(bv)])
        n_ab = int(nbr[t, ti.index(cv)])
        n_dc = int(nbr[u, tri_u.index(bv)])
        n_db = int(nbr[u, tri_u.index(cv)])
        # t -> (a, b, d), u -> (a, d, c); neighbor k sits opposite vertex k
        simp[t] = (av, bv, dv)
        nbr[t] = (n_db, u, n_ab)
        simp[u] = (av, dv, cv)
        nbr[u] = (n_dc, n_ac, t)
        for x, old, new in ((n_db, u, t), (n_ac, t, u)):
            if x >= 0:
                row = nbr[x]
                row[row == old] = new
        queue.extend([(t, 0), (t, 2), (u, 0), (u, 1)])
    return flips


def _circumcircles(z: np.ndarray, tris: np.ndarray, chunk: int = 1 << 20):
    T = tris.shape[0]
    ce = np.empty(T, dtype=complex)
    re = np.empty(T)
    deg = np.empty(T, dtype=bool)
    for start in range(0, T, chunk):
        sl = slice(start, start + chunk)
        t = tris[sl]
        ce[sl], re[sl], deg[sl] = euclid_circumcircle_many(z[t[:, 0]], z[t[:, 1]], z[t[:, 2]])
    return ce, re, deg


def hyperbolic_centers_many(ce: np.ndarray, re: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized hyperbolic centers (rad_h, theta) and radii of Euclidean circles in the disk."""
    m = np.abs(ce)
    a1 = np.arctanh(m - re)
    a2 = np.arctanh(m + re)
    sgn = a1 + a2
    theta = np.where(m > 0, np.angle(ce), 0.0)
    theta = np.where(sgn < 0, theta + math.pi, theta) % TWO_PI
    rad = np.abs(sgn)
    theta = np.where(rad > 0, theta, 0.0)
    return rad, theta, a2 - a1


def _core_flags(s: Sample, margin: float, triangles: np.ndarray, unresolved: np.ndarray):
    vcore = s.rad <= s.window_r - margin
    if len(unresolved):
        vcore = vcore.copy()
        vcore[unresolved] = False
    tcore = vcore[triangles].all(axis=1) if len(triangles) else np.zeros(0, dtype=bool)
    return vcore, tcore


def _adjacency(triangles: np.ndarray, n: int) -> np.ndarray:
    T = triangles.shape[0]
    adj = np.full((T, 3), -1, dtype=np.int64)
    if T == 0:
        return adj
    keys = np.empty(3 * T, dtype=np.int64)
    for j in range(3):
        a = triangles[:, (j + 1) % 3]
        b = triangles[:, (j + 2) % 3]
        keys[j * T:(j + 1) * T] = np.minimum(a, b) * n + np.maximum(a, b)
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    del keys
    same = np.flatnonzero(ks[1:] == ks[:-1])
    del ks
    if len(same) and np.any(same[1:] == same[:-1] + 1):
        raise TessError("an edge is shared by more than two triangles")
    h1, h2 = order[same], order[same + 1]
    del order
    adj[h1 % T, h1 // T] = h2 % T
    adj[h2 % T, h2 // T] = h1 % T
    return adj


def _sorted_rows(tris: np.ndarray) -> np.ndarray:
    tris = np.sort(tris, axis=1)
    order = np.lexsort((tris[:, 2], tris[:, 1], tris[:, 0]))
    return tris[order]


def _finish(s: Sample, tris: np.ndarray, edges: np.ndarray, valid: np.ndarray,
            margin: Optional[float], unresolved: np.ndarray, meta: dict) -> DelaunayComplex:
    z = s.z
    n = len(s)
    if len(tris):
        tris = _sorted_rows(np.asarray(tris, dtype=np.int64))
        if len(tris) > 1:
            dup = np.all(tris[1:] == tris[:-1], axis=1)
            if dup.any():
                tris = tris[np.concatenate([[True], ~dup])]
        ce, re, _ = _circumcircles(z, tris)
    else:
        tris = np.zeros((0, 3), dtype=np.int64)
        ce, re = np.zeros(0, dtype=complex), np.zeros(0)
    if len(edges):
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges, valid = edges[order], valid[order]
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
        valid = np.zeros(0, dtype=bool)
    if margin is None:
        margin = core_margin(s.lam) if s.lam > 0 else 0.0
    vcore, tcore = _core_flags(s, margin, tris, unresolved)
    return DelaunayComplex(s, tris, _adjacency(tris, max(n, 1)), edges.astype(np.int64),
                           valid.astype(bool), ce, re, float(margin), vcore, tcore,
                           unresolved.astype(np.int64), meta)


def _triangle_edges(tris: np.ndarray) -> np.ndarray:
    if len(tris) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [0, 2]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def _in_set(rows: np.ndarray, ref: np.ndarray, n: int) -> np.ndarray:
    if len(rows) == 0 or len(ref) == 0:
        return np.zeros(len(rows), dtype=bool)
    return np.isin(rows[:, 0] * n + rows[:, 1], ref[:, 0] * n + ref[:, 1])


def _pair_witness_brute(z: np.ndarray, p: int, q: int) -> bool:
    """Direct search for an empty finite disk with p and q on its boundary."""
    m, nrm, h = _edge_frame(np.array([z[p]]), np.array([z[q]]))
    m, nrm, h = complex(m[0]), complex(nrm[0]), float(h[0])
    others = np.delete(np.arange(len(z)), [p, q])
    lo, hi = -2.0, 2.0
    if len(others):
        w = z[others] - m
        side = (w * np.conj(nrm)).real
        along = (w * np.conj(1j * nrm)).real
        on_line = np.abs(side) <= 1e-15
        if np.any(on_line & (np.abs(along) < h)):
            return False
        off = ~on_line
        tw = (np.abs(w[off]) ** 2 - h * h) / (2.0 * side[off])
        left = side[off] > 0
        if np.any(left):
            hi = min(hi, float(tw[left].min()))
        if np.any(~left):
            lo = max(lo, float(tw[~left].max()))
    if lo > hi:
        return False
    val = _witness_min_closed(np.array([m]), np.array([nrm]), np.array([h]), np.array([lo]), np.array([hi]))
    return bool(val[0] < 1.0 - EPS_BOUNDARY)


def delaunay_bruteforce(s: Sample, core_margin_h: Optional[float] = None) -> DelaunayComplex:
    """Delaunay complex straight from the empty-circumdisk definition.

    Every triple is tested against every point; edges carry an explicit
    witness disk computed in closed form.  Limited to BRUTE_MAX_N points.
    """
    n = len(s)
    if n > BRUTE_MAX_N:
        raise GuardError(f"n={n} exceeds the brute-force guard {BRUTE_MAX_N}")
    z = s.z
    tris: list[tuple[int, int, int]] = []
    fans: set[tuple[int, int, int]] = set()
    if n >= 3:
        idx = np.array([(a, b, c) for a in range(n) for b in range(a + 1, n) for c in range(b + 1, n)],
                       dtype=np.int64)
        ce, re, deg = euclid_circumcircle_many(z[idx[:, 0]], z[idx[:, 1]], z[idx[:, 2]])
        ok = (~deg) & (np.abs(ce) + re < 1.0 - EPS_BOUNDARY)
        idx, ce, re = idx[ok], ce[ok], re[ok]
        for start in range(0, len(idx), 4096):
            sl = slice(start, start + 4096)
            dist = np.abs(z[None, :] - ce[sl, None])
            tol = COCIRCULAR_TOL * re[sl, None]
            inside = dist < re[sl, None] - tol
            on = np.abs(dist - re[sl, None]) <= tol
            empty = ~inside.any(axis=1)
            for k in np.flatnonzero(empty):
                tri = tuple(int(v) for v in idx[start + k])
                group = np.flatnonzero(on[k]).tolist()
                extra = set(group) - set(tri)
                if not extra:
                    tris.append(tri)
                else:
                    fan = _fan_triangles(sorted(set(group) | set(tri)), z, complex(ce[start + k]))
                    if tri in fan:
                        fans.add(tri)
    tri_arr = np.array(sorted(set(tris) | fans), dtype=np.int64).reshape(-1, 3)
    pairs = [(p, q) for p in range(n) for q in range(p + 1, n)]
    in_tri = _triangle_edges(tri_arr)
    edges, valid = [], []
    intri = set(map(tuple, in_tri.tolist()))
    for p, q in pairs:
        if (p, q) in intri or _pair_witness_brute(z, p, q):
            edges.append((p, q))
            valid.append(True)
    return _finish(s, tri_arr, np.array(edges, dtype=np.int64).reshape(-1, 2), np.array(valid, dtype=bool),
                   core_margin_h, np.zeros(0, dtype=np.int64), {"method": "bruteforce"})


def _euclidean_triangulation(xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean Delaunay triangles and neighbor table (neighbor j opposite vertex j)."""
    out = triangle.triangulate({"vertices": xy}, "Qn")
    tris = out.get("triangles")
    if tris is None or len(tris) == 0:
        return np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3), dtype=np.int64)
    return tris.astype(np.int64), out["neighbors"].astype(np.int64)


def _cocircular_repair(z, xy, simp, ce, re, kept):
    """Apply the fan rule where extra points sit on a kept circumcircle.

    Overlapping groups are merged so every kept face inside a group is
    replaced by the same fan.  Returns (faces to drop, fan faces to add,
    count of faces with a point strictly inside).
    """
    tree = cKDTree(xy)
    suspicious = []
    for start in range(0, len(kept), 1 << 19):
        ks = kept[start:start + (1 << 19)]
        cnt = tree.query_ball_point(np.column_stack([ce[ks].real, ce[ks].imag]),
                                    re[ks] * (1.0 + COCIRCULAR_TOL), return_length=True)
        suspicious.extend(ks[cnt > 3].tolist())
    groups: list[tuple[set[int], complex]] = []
    dropped_faces: set[tuple[int, int, int]] = set()
    for t in suspicious:
        c, r = complex(ce[t]), float(re[t])
        near = tree.query_ball_point([c.real, c.imag], r * (1.0 + COCIRCULAR_TOL))
        dist = np.abs(z[near] - c)
        tri = tuple(sorted(int(v) for v in simp[t]))
        if any(d < r * (1.0 - COCIRCULAR_TOL) and v not in tri for v, d in zip(near, dist)):
            dropped_faces.add(tri)
            continue
        members = set(int(v) for v in near) | set(tri)
        for g in [g for g in groups if g[0] & members]:
            members |= g[0]
            groups.remove(g)
        groups.append((members, c))
    replaced: set[tuple[int, int, int]] = set(dropped_faces)
    fans: set[tuple[int, int, int]] = set()
    if groups:
        rows = np.sort(simp[kept], axis=1)
        for members, c in groups:
            mem = np.array(sorted(members))
            inside = np.isin(rows, mem).all(axis=1)
            replaced.update(tuple(int(v) for v in row) for row in rows[inside])
            fans.update(_fan_triangles(sorted(members), z, c))
    return replaced, fans, len(dropped_faces)


def delaunay(s: Sample, core_margin_h: Optional[float] = None) -> DelaunayComplex:
    """Hyperbolic Delaunay complex via the Euclidean triangulation of the Poincare points.

    Faces with a circumcircle leaving the disk are pruned.  Candidate edges
    with no surviving face are kept only if a witness disk through both
    endpoints exists along their bisector.  Duplicate points dropped by the
    triangulation are recorded in ``unresolved`` and flagged non-core.
    """
    n = len(s)
    z = s.z
    if n < 3:
        edges = [(p, q) for p in range(n) for q in range(p + 1, n) if _pair_witness_brute(z, p, q)]
        return _finish(s, np.zeros((0, 3), dtype=np.int64), np.array(edges, dtype=np.int64).reshape(-1, 2),
                       np.ones(len(edges), dtype=bool), core_margin_h, np.zeros(0, dtype=np.int64),
                       {"method": "direct"})
    xy = np.column_stack([z.real, z.imag])
    simp, nbr = _euclidean_triangulation(xy)
    if len(simp) == 0:
        # collinear input has no faces; the definition applies directly
        if n <= BRUTE_MAX_N:
            return delaunay_bruteforce(s, core_margin_h)
        raise TessError("degenerate (collinear) input too large for the direct edge test")
    flips = _legalize(z, simp, nbr)
    del nbr
    referenced = np.zeros(n, dtype=bool)
    referenced[simp.ravel()] = True
    unresolved = np.flatnonzero(~referenced).astype(np.int64)
    ce, re, deg = _circumcircles(z, simp)
    keep = (~deg) & (np.abs(ce) + re < 1.0 - EPS_BOUNDARY)
    del deg
    meta: dict[str, Any] = {"method": "triangle", "unresolved": int(len(unresolved)), "flips": flips}

    kept = np.flatnonzero(keep)
    replaced, fans, dropped = _cocircular_repair(z, xy, simp, ce, re, kept)
    del ce, re
    if dropped:
        meta["roundoff_dropped"] = dropped
    tri_arr = simp[kept]
    if replaced or fans:
        srt = np.sort(tri_arr, axis=1)
        rk = np.array([(a * n + b) * n + c for a, b, c in replaced], dtype=object)
        keys = (srt[:, 0].astype(object) * n + srt[:, 1]) * n + srt[:, 2]
        drop = np.isin(keys, rk) if len(rk) else np.zeros(len(srt), dtype=bool)
        tri_arr = np.concatenate([srt[~drop], np.array(sorted(fans), dtype=np.int64).reshape(-1, 3)])
        meta["cocircular_groups"] = len(replaced)

    # candidate edges: one per Euclidean triangulation edge
    T = simp.shape[0]
    key = np.empty(3 * T, dtype=np.int64)
    for j in range(3):
        a = simp[:, (j + 1) % 3]
        b = simp[:, (j + 2) % 3]
        key[j * T:(j + 1) * T] = np.minimum(a, b) * n + np.maximum(a, b)
    ukey, inv = np.unique(key, return_inverse=True)
    del key
    in_tri = np.zeros(len(ukey), dtype=bool)
    half_kept = np.concatenate([kept + j * T for j in range(3)])
    in_tri[inv[half_kept]] = True
    del half_kept
    if fans:
        fe = _triangle_edges(np.array(sorted(fans), dtype=np.int64).reshape(-1, 3))
        in_tri |= np.isin(ukey, fe[:, 0] * n + fe[:, 1])

    # bounds of the empty-circle family along each remaining edge's bisector
    need_e = np.flatnonzero(~in_tri)
    witness = np.zeros(len(ukey), dtype=bool)
    if len(need_e):
        need_mask = np.zeros(len(ukey), dtype=bool)
        need_mask[need_e] = True
        he = np.flatnonzero(need_mask[inv])
        local = np.searchsorted(need_e, inv[he])
        ep, eq = ukey[need_e] // n, ukey[need_e] % n
        m, nrm, h = _edge_frame(z[ep], z[eq])
        w = z[simp[he % T, he // T]] - m[local]
        side = (w * np.conj(nrm[local])).real
        with np.errstate(divide="ignore", invalid="ignore"):
            tw = (np.abs(w) ** 2 - h[local] ** 2) / (2.0 * side)
        lo = np.full(len(need_e), -2.0)
        hi = np.full(len(need_e), 2.0)
        left = side > 0
        right = side < 0
        np.minimum.at(hi, local[left], tw[left])
        np.maximum.at(lo, local[right], tw[right])
        lo = np.clip(lo, -2.0, 2.0)
        hi = np.clip(hi, -2.0, 2.0)
        ok = lo <= hi
        val = np.full(len(need_e), np.inf)
        if np.any(ok):
            val[ok] = _witness_min_bisect(m[ok], nrm[ok], h[ok], lo[ok], hi[ok])
        witness[need_e] = val < 1.0 - EPS_BOUNDARY
    del inv
    valid = in_tri | witness
    cand = np.column_stack([ukey // n, ukey % n])
    if fans:
        extra = _triangle_edges(np.array(sorted(fans), dtype=np.int64).reshape(-1, 3))
        missing = extra[~np.isin(extra[:, 0] * n + extra[:, 1], ukey)]
        if len(missing):
            cand = np.concatenate([cand, missing])
            valid = np.concatenate([valid, np.ones(len(missing), dtype=bool)])
    meta["candidate_faces"] = int(T)
    meta["witness_edges"] = int(witness.sum())
    return _finish(s, tri_arr, cand, valid, core_margin_h, unresolved, meta)


# -- dual graphs --------------------------------------------------------------


def dual_voronoi_graph(c: DelaunayComplex, root: Optional[int] = None) -> DualGraph:
    """Graph on the nuclei joined by hyperbolic Delaunay edges.

    With root=None the origin nucleus of a root-conditioned sample is used.
    """
    s = c.sample
    if root is None:
        if s.conditioning != ROOT_AT_ORIGIN:
            raise GraphError("root requested but the sample is not conditioned on a root at the origin")
        root = 0
    geo = np.column_stack([s.rad, s.theta])
    g = DualGraph.from_edges(len(s), c.valid_edges, int(root), c.vertex_core, VORONOI_DUAL, geo)
    g.meta["core_margin"] = c.core_margin
    return g


def origin_triangle(c: DelaunayComplex) -> Optional[int]:
    """Smallest id of a triangle whose closed region contains the origin."""
    if c.n_triangles == 0:
        return None
    k = to_klein_many(c.sample.z)[c.triangles]
    a, b, d = k[:, 0], k[:, 1], k[:, 2]

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    s1 = cross(b - a, -a)
    s2 = cross(d - b, -b)
    s3 = cross(a - d, -d)
    inside = ((s1 >= 0) & (s2 >= 0) & (s3 >= 0)) | ((s1 <= 0) & (s2 <= 0) & (s3 <= 0))
    hits = np.flatnonzero(inside)
    return int(hits[0]) if len(hits) else None


def dual_delaunay_graph(c: DelaunayComplex, root: Optional[int] = None) -> DualGraph:
    """Graph on the triangles, adjacent when they share an edge.

    With root=None the triangle containing the origin is the root.
    """
    if root is None:
        root = origin_triangle(c)
        if root is None:
            raise GraphError("root requested but no triangle contains the origin")
    T = c.n_triangles
    src = np.repeat(np.arange(T), 3)
    dst = c.triangle_adjacency.ravel()
    ok = (dst >= 0) & (src < dst)
    edges = np.column_stack([src[ok], dst[ok]])
    g = DualGraph.from_edges(T, edges, int(root), c.triangle_core, DELAUNAY_DUAL, c.centers_h)
    g.meta["core_margin"] = c.core_margin
    return g


# -- stars --------------------------------------------------------------------


@dataclass(frozen=True)
class Star:
    triangles: tuple[int, ...]
    radius: float


def triangle_star(c: DelaunayComplex, nucleus: int) -> Star:
    """Triangles incident to a nucleus and the largest distance from it to the star."""
    n = len(c.sample)
    if not (0 <= nucleus < n):
        raise TessError(f"nucleus={nucleus} not a point of the sample")
    indptr, tids = c.vertex_triangles
    ts = np.sort(tids[indptr[nucleus]:indptr[nucleus + 1]])
    if len(ts) == 0:
        return Star((), 0.0)
    # distance to a point is convex along geodesics, so the farthest point is a vertex
    verts = np.unique(c.triangles[ts])
    z = c.sample.z
    d = dist_h_many(np.full(len(verts), z[nucleus]), z[verts])
    return Star(tuple(int(t) for t in ts), float(d.max()))


# -- Voronoi cells --------------------------------------------------------------


SQUARE = -1
WINDOW = -2


@dataclass(frozen=True)
class CellPiece:
    """A boundary piece of a cell, counterclockwise.

    ``label`` is the neighboring nucleus for bisector pieces and WINDOW for
    arcs of the window circle.  Endpoints are Poincare coordinates.
    """

    label: int
    start: complex
    end: complex


@dataclass(frozen=True)
class VoronoiCell:
    nucleus: int
    pieces: tuple[CellPiece, ...]
    clipped: bool
    area: float

    @property
    def vertices(self) -> list[complex]:
        """Corners where two bisector pieces meet (Voronoi vertices)."""
        out = []
        k = len(self.pieces)
        for i in range(k):
            a, b = self.pieces[i], self.pieces[(i + 1) % k]
            if a.label >= 0 and b.label >= 0:
                out.append(a.end)
        return out


@dataclass(frozen=True)
class VoronoiCells:
    window_r: float
    cells: tuple[VoronoiCell, ...]

    def __len__(self) -> int:
        return len(self.cells)

    def total_area(self) -> float:
        return float(sum(c.area for c in self.cells))


def _hyperboloid(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a2 = np.abs(z) ** 2
    x0 = (1.0 + a2) / (1.0 - a2)
    xv = 2.0 * z / (1.0 - a2)
    return x0, xv


def _clip_halfplane(poly: list[tuple[complex, int]], a: complex, b: float, label: int):
    """Keep the part of a convex polygon with Re(conj(a) k) <= b.

    ``poly`` is a list of (vertex, label of the edge leaving it).
    """
    out: list[tuple[complex, int]] = []
    k = len(poly)
    if k == 0:
        return out
    vals = [(v * a.conjugate()).real - b for v, _ in poly]
    for i in range(k):
        v, lab = poly[i]
        w, _ = poly[(i + 1) % k]
        fv, fw = vals[i], vals[(i + 1) % k]
        if fv <= 0:
            out.append((v, lab))
            if fw > 0:
                x = v + (w - v) * (fv / (fv - fw))
                out.append((x, label))
        elif fw <= 0:
            x = v + (w - v) * (fv / (fv - fw))
            out.append((x, lab))
    return out


def _segment_in_disk(v: complex, w: complex, R: float) -> Optional[tuple[float, float]]:
    d = w - v
    A = abs(d) ** 2
    if A == 0:
        return None
    B = 2.0 * (v.conjugate() * d).real
    C = abs(v) ** 2 - R * R
    disc = B * B - 4 * A * C
    if disc <= 0:
        return None
    sq = math.sqrt(disc)
    t0 = max(0.0, (-B - sq) / (2 * A))
    t1 = min(1.0, (-B + sq) / (2 * A))
    if t1 <= t0:
        return None
    return t0, t1


def _cell(i: int, z: np.ndarray, x0: np.ndarray, xv: np.ndarray, nbrs: np.ndarray,
          kR: float, eW: float) -> VoronoiCell:
    poly: list[tuple[complex, int]] = [(complex(-1, -1), SQUARE), (complex(1, -1), SQUARE),
                                       (complex(1, 1), SQUARE), (complex(-1, 1), SQUARE)]
    for j in nbrs.tolist():
        # closer to i than j in Klein coordinates: (x0_i - x0_j) - k.(xv_i - xv_j) <= 0
        a = -(xv[i] - xv[j])
        b = -(x0[i] - x0[j])
        poly = _clip_halfplane(poly, a, b, j)
    # intersect the convex polygon with the Klein window disk
    segs: list[tuple[int, complex, complex, bool, bool]] = []
    k = len(poly)
    for idx in range(k):
        v, lab = poly[idx]
        w, _ = poly[(idx + 1) % k]
        tt = _segment_in_disk(v, w, kR)
        if tt is None:
            continue
        t0, t1 = tt
        segs.append((lab, v + t0 * (w - v), v + t1 * (w - v), t0 > 0.0, t1 < 1.0))
    pieces: list[CellPiece] = []
    area = 0.0
    clipped = False
    if not segs:
        # no polygon edge inside the window: the cell is the whole window
        pieces.append(CellPiece(WINDOW, complex(eW, 0), complex(eW, 0)))
        return VoronoiCell(i, tuple(pieces), True, circle_form_integral(eW, 0.0, TWO_PI))
    m = len(segs)
    for idx in range(m):
        lab, ks, ke, _, cut_end = segs[idx]
        ps, pe = from_klein_many(np.array([ks, ke]))
        pieces.append(CellPiece(lab, complex(ps), complex(pe)))
        area += geodesic_form_integral(complex(ps), complex(pe))
        nxt = segs[(idx + 1) % m]
        if cut_end or nxt[3]:
            # leave through the window and come back along the circle
            clipped = True
            qs = complex(from_klein_many(np.array([nxt[1]]))[0])
            phi0 = math.atan2(pe.imag, pe.real)
            phi1 = math.atan2(qs.imag, qs.real)
            if phi1 <= phi0:
                phi1 += TWO_PI
            if m == 1 and phi1 - phi0 < 1e-15:
                phi1 = phi0
            pieces.append(CellPiece(WINDOW, complex(pe), qs))
            area += circle_form_integral(eW, phi0, phi1)
    if any(lab == SQUARE for lab, *_ in segs):
        raise TessError(f"cell {i} reaches the bounding square inside the window")
    return VoronoiCell(i, tuple(pieces), clipped, area)


def voronoi_cells(c: DelaunayComplex) -> VoronoiCells:
    """Voronoi cells of the sample clipped to the window disk.

    Each cell is the intersection of half-planes (straight in the Klein
    model) against its candidate neighbors, then intersected with the
    window.  Areas integrate the hyperbolic area form along the boundary.
    """
    s = c.sample
    n = len(s)
    z = s.z
    x0, xv = _hyperboloid(z)
    kR = math.tanh(s.window_r)
    eW = radius_h_to_e(s.window_r)
    # every candidate edge bounds the cell; non-Delaunay ones just never bind
    g = DualGraph.from_edges(n, c.edges, 0 if n else 0, np.ones(n, dtype=bool)) if n else None
    cells = []
    for i in range(n):
        nb = g.neighbors(i) if g is not None else np.zeros(0, dtype=np.int64)
        if n > 1 and len(nb) == 0:
            # fewer than 3 points and no candidate edges: clip against everyone
            nb = np.delete(np.arange(n), i)
        cells.append(_cell(i, z, x0, xv, nb, kR, eW))
    return VoronoiCells(float(s.window_r), tuple(cells))


def edge_set(c: DelaunayComplex) -> set[tuple[int, int]]:
    return {tuple(e) for e in c.valid_edges.tolist()}


__all__ = [
    "DelaunayComplex", "VoronoiCells", "VoronoiCell", "CellPiece", "Star", "TessError",
    "core_margin", "delaunay", "delaunay_bruteforce", "dual_voronoi_graph", "dual_delaunay_graph",
    "origin_triangle", "triangle_star", "voronoi_cells", "edge_set", "BRUTE_MAX_N",
]
