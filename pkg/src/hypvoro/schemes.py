"""Triangulation schemes, triangle orderings and the tree-indexed Z process.

A scheme on k points is a map f from {3, ..., k} to pairs of earlier
indices: point i is attached to the edge f(i).  Indices are 1-based
throughout, matching how schemes are written down by hand.
"""
from __future__ import annotations

import itertools
import json
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from . import rng
from .graph import GuardError
from .hypgeo import COLLINEAR_AREA, to_klein_many

MAX_ENUM_K = 9
MAX_PLANAR_K = 7

Tri = tuple[int, int, int]
Edge = tuple[int, int]


class SchemeError(ValueError):
    pass


# -- schemes ------------------------------------------------------------------


def is_scheme(k: int, f) -> tuple[bool, Optional[tuple[int, int]]]:
    """Check the four scheme conditions.

    ``f`` maps i -> pair (dict, or a sequence listing f(3), ..., f(k)).
    Returns (True, None) or (False, (condition, i)) for the first index i,
    in increasing order, at which some condition fails.
    """
    fm = _as_map(k, f)
    seen_pairs: set[frozenset] = set()
    touched: set[int] = set()
    hits: dict[int, int] = defaultdict(int)
    for i in range(3, k + 1):
        pair = fm.get(i)
        if pair is None or len(pair) != 2:
            return False, (2, i)
        a, b = pair
        if a == b or not (1 <= a <= i - 1 and 1 <= b <= i - 1):
            return False, (2, i)
        key = frozenset((a, b))
        if i >= 4:
            if key in seen_pairs:
                return False, (1, i)
            seen_pairs.add(key)
        if touched and a not in touched and b not in touched:
            return False, (3, i)
        touched.update((a, b))
        hits[max(a, b)] += 1
        if hits[max(a, b)] > 2:
            return False, (4, i)
    return True, None


def _as_map(k: int, f) -> dict[int, tuple[int, int]]:
    if isinstance(f, dict):
        return {int(i): tuple(int(v) for v in p) for i, p in f.items()}
    seq = list(f)
    if len(seq) != k - 2:
        raise SchemeError(f"f must list {k - 2} pairs for k={k}, got {len(seq)}")
    return {i + 3: tuple(int(v) for v in p) for i, p in enumerate(seq)}


@dataclass(frozen=True)
class Scheme:
    """A valid triangulation scheme; ``f[i - 3]`` is the sorted pair f(i)."""

    k: int
    f: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.k < 3:
            raise SchemeError(f"k={self.k} must be >= 3")
        pairs = tuple(tuple(sorted(int(v) for v in p)) for p in self.f)
        object.__setattr__(self, "f", pairs)
        ok, bad = is_scheme(self.k, pairs)
        if not ok:
            raise SchemeError(f"not a triangulation scheme: condition {bad[0]} fails at i={bad[1]}")

    def pair(self, i: int) -> tuple[int, int]:
        return self.f[i - 3]

    def g(self, i: int) -> int:
        """max f(i) for i >= 3; the tree parent of i."""
        return self.f[i - 3][1]

    def tree_edges(self) -> list[tuple[int, int]]:
        """Directed edges (i, g(i)) of the tree on {2, ..., k}."""
        return [(i, self.g(i)) for i in range(3, self.k + 1)]

    def triangles(self, order: Sequence[int]) -> list[Tri]:
        """Triangles (x_i, x_a, x_b) for an ordering x_1..x_k of point ids."""
        if len(order) != self.k:
            raise SchemeError(f"ordering has {len(order)} points, scheme needs {self.k}")
        out = []
        for i in range(3, self.k + 1):
            a, b = self.pair(i)
            out.append(tuple(sorted((order[i - 1], order[a - 1], order[b - 1]))))
        return out

    def to_dict(self) -> dict:
        return {"k": self.k, "f": [[i, *self.pair(i)] for i in range(3, self.k + 1)]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "Scheme":
        k = int(d["k"])
        fm = {int(r[0]): (int(r[1]), int(r[2])) for r in d["f"]}
        if sorted(fm) != list(range(3, k + 1)):
            raise SchemeError("scheme JSON must define f(i) for every i in 3..k")
        return cls(k, tuple(fm[i] for i in range(3, k + 1)))

    @classmethod
    def chain(cls, k: int) -> "Scheme":
        """f(3) = {1,2}, f(i) = {i-2, i-1}: the tree is a path."""
        return cls(k, tuple((max(1, i - 2), i - 1) if i > 3 else (1, 2) for i in range(3, k + 1)))


def _enum(k: int) -> Iterator[tuple[tuple[int, int], ...]]:
    f: list[tuple[int, int]] = [(1, 2)]
    used: set[tuple[int, int]] = set()
    hits = defaultdict(int)
    hits[2] = 1
    touched = {1, 2}

    def rec(i: int):
        if i > k:
            yield tuple(f)
            return
        for a in range(1, i - 1):
            for b in range(a + 1, i):
                if (a, b) in used or hits[b] >= 2:
                    continue
                if a not in touched and b not in touched:
                    continue
                new = [v for v in (a, b) if v not in touched]
                used.add((a, b))
                hits[b] += 1
                touched.update(new)
                f.append((a, b))
                yield from rec(i + 1)
                f.pop()
                touched.difference_update(new)
                hits[b] -= 1
                used.discard((a, b))

    yield from rec(4)


def enumerate_schemes(k: int) -> tuple[int, Iterator[Scheme]]:
    """Count and iterate all schemes on k points (guard k <= 9).

    Choices are made incrementally in increasing i with each condition
    checked as soon as it is decidable.
    """
    if k > MAX_ENUM_K:
        raise GuardError(f"k={k} exceeds the enumeration guard {MAX_ENUM_K}")
    if k < 3:
        raise SchemeError(f"k={k} must be >= 3")
    count = sum(1 for _ in _enum(k))
    return count, (Scheme(k, f) for f in _enum(k))


def count_schemes_reversed(k: int) -> int:
    """Independent recount: every candidate function, generated with i = k
    varying slowest, filtered by the full condition check."""
    if k > MAX_ENUM_K:
        raise GuardError(f"k={k} exceeds the enumeration guard {MAX_ENUM_K}")
    choices = [list(itertools.combinations(range(1, i), 2)) for i in range(k, 2, -1)]
    total = 0
    for combo in itertools.product(*choices):
        f = {k - j: p for j, p in enumerate(combo)}
        if is_scheme(k, f)[0]:
            total += 1
    return total


# -- planar pairs -----------------------------------------------------------------


def _separated(P: np.ndarray, Q: np.ndarray, tol: float) -> bool:
    """Interiors of two convex polygons (Klein coordinates) are disjoint."""
    for poly in (P, Q):
        m = len(poly)
        for j in range(m):
            e = poly[(j + 1) % m] - poly[j]
            nrm = np.array([-e[1], e[0]])
            a = P @ nrm
            b = Q @ nrm
            if a.max() <= b.min() + tol or b.max() <= a.min() + tol:
                return True
    return False


def triangles_disjoint(k1: np.ndarray, k2: np.ndarray, tol: float = 1e-12) -> bool:
    return _separated(k1, k2, tol)


def count_planar_pairs(points, nondegenerate: bool = True) -> int:
    """Number of (ordering, scheme) pairs whose triangles have disjoint interiors.

    ``points`` are Poincare coordinates (complex) or HPoints; |X| <= 7.
    Degenerate triangles make a pair ineligible unless nondegenerate=False.
    """
    z = np.array([p if isinstance(p, complex) else complex(p.z) if hasattr(p, "z") else complex(p)
                  for p in points], dtype=complex)
    k = len(z)
    if k > MAX_PLANAR_K:
        raise GuardError(f"|X|={k} exceeds the planar-pair guard {MAX_PLANAR_K}")
    if k < 3:
        raise SchemeError(f"|X|={k} must be >= 3")
    kl = to_klein_many(z)
    xy = np.column_stack([kl.real, kl.imag])

    def tri_xy(t):
        return xy[list(t)]

    def degenerate(t):
        a, b, c = xy[list(t)]
        return 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) < COLLINEAR_AREA

    schemes = list(_enum(k))
    total = 0
    for order in itertools.permutations(range(k)):
        cache: dict[Tri, bool] = {}
        for f in schemes:
            tris = []
            ok = True
            for i in range(3, k + 1):
                a, b = f[i - 3]
                t = (order[i - 1], order[a - 1], order[b - 1])
                if nondegenerate and degenerate(t):
                    ok = False
                    break
                tris.append(t)
            if not ok:
                continue
            for x, y in itertools.combinations(range(len(tris)), 2):
                key = tuple(sorted((tuple(sorted(tris[x])), tuple(sorted(tris[y])))))
                sep = cache.get(key)
                if sep is None:
                    sep = _separated(tri_xy(tris[x]), tri_xy(tris[y]), 1e-12)
                    cache[key] = sep
                if not sep:
                    ok = False
                    break
            total += ok
    return total


# -- triangle orderings ---------------------------------------------------------


def _edges_of(t: Tri) -> list[Edge]:
    a, b, c = sorted(t)
    return [(a, b), (b, c), (a, c)]


class _Patch:
    """Edge incidence of a triangle collection."""

    def __init__(self, tris: Sequence[Tri]):
        self.tris = [tuple(sorted(int(v) for v in t)) for t in tris]
        self.edge_tris: dict[Edge, list[int]] = defaultdict(list)
        for idx, t in enumerate(self.tris):
            for e in _edges_of(t):
                self.edge_tris[e].append(idx)
        for e, ts in self.edge_tris.items():
            if len(ts) > 2:
                raise SchemeError(f"edge {e} lies in more than two triangles")

    def boundary(self, members: set[int]) -> set[Edge]:
        cnt: dict[Edge, int] = defaultdict(int)
        for idx in members:
            for e in _edges_of(self.tris[idx]):
                cnt[e] += 1
        return {e for e, c in cnt.items() if c == 1}

    def neighbors(self, idx: int, members: set[int]) -> list[int]:
        out = []
        for e in _edges_of(self.tris[idx]):
            out.extend(j for j in self.edge_tris[e] if j != idx and j in members)
        return out

    def components(self, members: set[int]) -> list[set[int]]:
        left = set(members)
        comps = []
        while left:
            start = min(left)
            comp = {start}
            q = deque([start])
            while q:
                u = q.popleft()
                for w in self.neighbors(u, members):
                    if w not in comp:
                        comp.add(w)
                        q.append(w)
            comps.append(comp)
            left -= comp
        return comps

    def euler_ok(self, members: set[int]) -> bool:
        verts = set()
        edges = set()
        for idx in members:
            verts.update(self.tris[idx])
            edges.update(_edges_of(self.tris[idx]))
        return len(edges) - len(members) == len(verts) - 1

    def boundary_successors(self, members: set[int], bnd: set[Edge]) -> dict[Edge, set[Edge]]:
        """Boundary edges adjacent along the boundary loops (rotating about shared vertices)."""
        adj: dict[Edge, set[Edge]] = defaultdict(set)
        for e in bnd:
            t = next(j for j in self.edge_tris[e] if j in members)
            for v in e:
                cur_t, cur_e = t, e
                for _ in range(len(members) + 1):
                    other = next(x for x in _edges_of(self.tris[cur_t]) if v in x and x != cur_e)
                    if other in bnd:
                        adj[e].add(other)
                        adj[other].add(e)
                        break
                    nxt = [j for j in self.edge_tris[other] if j != cur_t and j in members]
                    cur_t, cur_e = nxt[0], other
        return adj


def is_simply_connected(tris: Sequence[Tri]) -> bool:
    """Edge-connected and Euler characteristic one (e - k = |X| - 1)."""
    p = _Patch(tris)
    members = set(range(len(p.tris)))
    return len(p.components(members)) == 1 and p.euler_ok(members)


def euler_defect(tris: Sequence[Tri]) -> int:
    """(e - k) - (|X| - 1) for a triangle collection; zero for a disk."""
    verts, edges = set(), set()
    for t in tris:
        verts.update(t)
        edges.update(_edges_of(tuple(sorted(t))))
    return (len(edges) - len(tris)) - (len(verts) - 1)


def order_triangles(tris: Sequence[Tri], t0: int = 0, V: Sequence[Edge] = ()) -> list[int]:
    """Order a strongly and simply connected collection starting from tris[t0].

    Every prefix stays strongly connected with a simply connected union,
    and the single edges through which new triangles attach, together
    with the boundary edges V, form a connected edge set.  Returns indices
    into ``tris``.  Ties are broken by the lowest triangle index and the
    lowest edge.
    """
    p = _Patch(tris)
    members = set(range(len(p.tris)))
    if not members:
        raise SchemeError("empty triangle collection")
    if not (0 <= t0 < len(p.tris)):
        raise SchemeError(f"t0={t0} not a triangle of the collection")
    if len(p.components(members)) != 1:
        raise SchemeError("triangles are not strongly connected")
    if not p.euler_ok(members):
        raise SchemeError("union of the triangles is not simply connected")
    Vn = {tuple(sorted(e)) for e in V}
    bnd = p.boundary(members)
    if not Vn <= bnd:
        raise SchemeError("V must consist of boundary edges")
    return _order(p, members, t0, Vn)


def _order(p: _Patch, members: set[int], t_star: int, V: set[Edge]) -> list[int]:
    if len(members) == 1:
        return [t_star]
    bnd = p.boundary(members)
    nb = {idx: sum(1 for e in _edges_of(p.tris[idx]) if e in bnd) for idx in sorted(members)}
    ears = [idx for idx, c in nb.items() if c >= 2]
    if ears:
        others = [idx for idx in ears if idx != t_star]
        if others:
            t = others[0]
            rest = members - {t}
            e = next(x for x in _edges_of(p.tris[t]) if x not in bnd)
            edges_rest = {x for idx in rest for x in _edges_of(p.tris[idx])}
            Vp = {x for x in V if x in edges_rest} | {e}
            return _order(p, rest, t_star, Vp) + [t]
        # only t_star is an ear: it goes first and its neighbor starts the rest
        t = t_star
        rest = members - {t}
        e = next(x for x in _edges_of(p.tris[t]) if x not in bnd)
        nxt = next(j for j in p.edge_tris[e] if j != t)
        edges_rest = {x for idx in rest for x in _edges_of(p.tris[idx])}
        Vp = {x for x in V if x in edges_rest} | {e}
        return [t] + _order(p, rest, nxt, Vp)
    # every boundary triangle has exactly one boundary edge
    adj = p.boundary_successors(members, bnd)
    cands = []
    for e in sorted(bnd):
        isolated = e in V and not any(x in V for x in adj[e])
        if isolated:
            continue
        t = next(j for j in p.edge_tris[e] if j in members)
        if t != t_star:
            cands.append((e, t))
    if not cands:
        raise SchemeError("no admissible boundary edge; collection is not a triangulated disk")
    e, t = cands[0]
    rest = members - {t}
    comps = p.components(rest)
    if len(comps) == 1:
        return _order(p, rest, t_star, V - {e}) + [t]
    c1 = next(c for c in comps if t_star in c)
    c2 = set().union(*(c for c in comps if t_star not in c)) | {t}
    if len(comps) != 2:
        raise SchemeError("removing a boundary triangle split the collection into more than two parts")
    tedges = _edges_of(p.tris[t])
    g = next(x for x in tedges if any(j in c1 for j in p.edge_tris[x] if j != t))
    e1 = {x for idx in c1 for x in _edges_of(p.tris[idx])}
    e2 = {x for idx in c2 for x in _edges_of(p.tris[idx])}
    V1 = {x for x in V if x in e1} | {g}
    V2 = {x for x in V if x in e2} | {g}
    return _order(p, c1, t_star, V1) + _order(p, c2, t, V2)


def attach_edges(tris: Sequence[Tri], order: Sequence[int]) -> dict[int, Optional[Edge]]:
    """For each position i > 0, the single shared edge with the earlier union (None if 0, 2 or 3)."""
    seen: set[Edge] = set()
    out: dict[int, Optional[Edge]] = {}
    for pos, idx in enumerate(order):
        es = _edges_of(tuple(sorted(tris[idx])))
        shared = [e for e in es if e in seen]
        if pos > 0:
            out[pos] = shared[0] if len(shared) == 1 else None
        seen.update(es)
    return out


def scheme_from_triangles(tris: Sequence[Tri], t0: int = 0) -> tuple[list[int], Scheme]:
    """An ordering x_1..x_k of the vertices and a scheme whose triangles lie in the collection.

    x_1 < x_2 < x_3 are the vertices of tris[t0]; each later point is the
    free vertex of a triangle that attaches through a single edge, and f
    records that edge.
    """
    order = order_triangles(tris, t0)
    t1 = sorted(int(v) for v in tris[order[0]])
    xs = list(t1)
    pos = {v: i + 1 for i, v in enumerate(xs)}
    f: list[tuple[int, int]] = [(1, 2)]
    for i, e in sorted(attach_edges(tris, order).items()):
        if e is None:
            continue
        t = tris[order[i]]
        free = next(int(v) for v in t if v not in e)
        if free in pos:
            raise SchemeError(f"vertex {free} reached twice; prefix union not simply connected")
        if e[0] not in pos or e[1] not in pos:
            raise SchemeError(f"attaching edge {e} has an unplaced endpoint")
        xs.append(free)
        pos[free] = len(xs)
        f.append(tuple(sorted((pos[e[0]], pos[e[1]]))))
    return xs, Scheme(len(xs), tuple(f))


# -- Z process --------------------------------------------------------------------


@dataclass(frozen=True)
class ZParams:
    alpha: float
    beta: float
    scheme: Scheme
    seed: int = 0

    def __post_init__(self):
        if not (self.alpha > 0):
            raise SchemeError(f"alpha={self.alpha!r} must be > 0")
        if not (0 < self.beta <= 1):
            raise SchemeError(f"beta={self.beta!r} must lie in (0, 1]")


@dataclass(frozen=True)
class ZResult:
    z: np.ndarray  # z[i] = Z_i for i = 2..k (entries 0, 1 unused)
    total: float  # sum over i = 3..k
    tail: Optional[float] = None
    trials: int = 0
    eps: Optional[float] = None


def _z_values(p: ZParams, k: int, u: np.ndarray) -> np.ndarray:
    """Vectorized recursion; u has shape (trials, k + 1) with columns 2..k used."""
    a, b = p.alpha, p.beta
    z = np.zeros_like(u)
    z[:, 2] = b * u[:, 2] ** (a / 2)
    for i in range(3, k + 1):
        z[:, i] = b * u[:, i] ** (a / 2) * z[:, p.scheme.g(i)] ** (1.0 / a)
    return z


def z_process(p: ZParams, k: int, u: Optional[Sequence[float]] = None, trials: int = 0,
              eps: Optional[float] = None, chunk: int = 1 << 17) -> ZResult:
    """One realization of Z_2..Z_k, and optionally a tail estimate.

    ``u`` fixes the uniforms U_2..U_k (deterministic test mode).  With
    trials > 0 and eps set, also estimates P[sum_{i=3}^k Z_i <= eps*k]
    from counter-based draws keyed by (seed, k, trials).
    """
    if k < 3 or k > p.scheme.k:
        raise SchemeError(f"k={k} must lie in 3..{p.scheme.k}")
    if u is None:
        u0 = rng.uniforms(p.seed, rng.ZPROC, 0, k + 1, 1, (k, 0))[:, 0]
    else:
        u0 = np.concatenate([[0.0, 0.0], np.asarray(u, dtype=np.float64)])
        if len(u0) != k + 1:
            raise SchemeError(f"u must give U_2..U_k ({k - 1} values)")
    z = _z_values(p, k, u0[None, :])[0]
    total = float(z[3:].sum())
    if trials <= 0:
        return ZResult(z, total)
    if eps is None or not (eps > 0):
        raise SchemeError("tail mode needs eps > 0")
    if p.alpha <= 2:
        raise SchemeError(f"tail mode needs alpha > 2, got {p.alpha}")
    hits = 0
    gen = rng.generator(p.seed, rng.ZPROC, k, trials)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        uu = gen.random((m, k + 1))
        zz = _z_values(p, k, uu)
        hits += int(np.count_nonzero(zz[:, 3:].sum(axis=1) <= eps * k))
        done += m
    return ZResult(z, total, hits / trials, trials, float(eps))


__all__ = [
    "Scheme", "SchemeError", "ZParams", "ZResult", "is_scheme", "enumerate_schemes",
    "count_schemes_reversed", "count_planar_pairs", "order_triangles", "scheme_from_triangles",
    "attach_edges", "is_simply_connected", "euler_defect", "triangles_disjoint", "z_process",
]
