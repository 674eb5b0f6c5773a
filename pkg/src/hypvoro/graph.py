"""Rooted graph algorithms on dual graphs.

Graphs are stored in CSR form (``indptr``/``indices``) so that window
samples with millions of vertices stay compact.  Expansion and i-core
functionals use exact rational arithmetic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .hypgeo import GuardError

VORONOI_DUAL = "voronoi-dual"
DELAUNAY_DUAL = "delaunay-dual"
UNREACHABLE = -1
MAX_EXPANSION_M = 14
MAX_CORE_SCAN = 20


class GraphError(ValueError):
    pass


@dataclass(eq=False)
class DualGraph:
    """Rooted graph in CSR form with core flags and geometric labels.

    ``geometry`` holds one [rad_h, theta] row per vertex: the nucleus for the
    Voronoi dual, the circumcenter for the Delaunay dual.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    root: int
    core: np.ndarray
    kind: str
    geometry: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        self.core = np.ascontiguousarray(self.core, dtype=bool)
        if self.indptr.shape != (self.n + 1,):
            raise GraphError("indptr must have n+1 entries")
        if self.core.shape != (self.n,):
            raise GraphError("core flags must have n entries")
        if self.n and not (0 <= self.root < self.n):
            raise GraphError(f"root={self.root} not a vertex")

    @classmethod
    def from_adjacency(cls, adjacency: Sequence[Iterable[int]], root: int = 0, core=None,
                       kind: str = VORONOI_DUAL, geometry=None) -> "DualGraph":
        adj = [sorted(set(int(v) for v in nb)) for nb in adjacency]
        n = len(adj)
        for u, nb in enumerate(adj):
            for v in nb:
                if v == u:
                    raise GraphError(f"self-loop at {u}")
                if not (0 <= v < n) or u not in adj[v]:
                    raise GraphError(f"adjacency not symmetric at ({u}, {v})")
        indptr = np.zeros(n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(nb) for nb in adj])
        indices = np.array([v for nb in adj for v in nb], dtype=np.int64)
        core = np.ones(n, dtype=bool) if core is None else np.asarray(core, dtype=bool)
        geo = None if geometry is None else np.asarray(geometry, dtype=np.float64)
        return cls(n, indptr, indices, int(root), core, kind, geo)

    @classmethod
    def from_edges(cls, n: int, edges: np.ndarray, root: int = 0, core=None,
                   kind: str = VORONOI_DUAL, geometry=None) -> "DualGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if np.any(edges[:, 0] == edges[:, 1]):
            raise GraphError("self-loop in edge list")
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if len(src) > 1:
            keep = np.ones(len(src), dtype=bool)
            keep[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            src, dst = src[keep], dst[keep]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        core = np.ones(n, dtype=bool) if core is None else np.asarray(core, dtype=bool)
        geo = None if geometry is None else np.asarray(geometry, dtype=np.float64)
        return cls(int(n), indptr, dst, int(root), core, kind, geo)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @cached_property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def num_edges(self) -> int:
        return int(self.indices.shape[0] // 2)

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(v).tolist() for v in range(self.n)]

    def to_dict(self) -> dict[str, Any]:
        geo = [] if self.geometry is None else self.geometry.tolist()
        return {
            "kind": self.kind,
            "root": int(self.root),
            "n": int(self.n),
            "adjacency": self.adjacency,
            "core": self.core.tolist(),
            "geometry": geo,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DualGraph":
        for key in ("kind", "root", "n", "adjacency", "core"):
            if key not in d:
                raise GraphError(f"graph JSON missing field {key!r}")
        if d["kind"] not in (VORONOI_DUAL, DELAUNAY_DUAL):
            raise GraphError(f"kind={d['kind']!r} unknown")
        if len(d["adjacency"]) != d["n"]:
            raise GraphError("adjacency length does not match n")
        geo = d.get("geometry") or None
        return cls.from_adjacency(d["adjacency"], d["root"], d["core"], d["kind"], geo)

    @classmethod
    def from_json(cls, text: str) -> "DualGraph":
        return cls.from_dict(json.loads(text))


def bfs_distances(g: DualGraph, source: int) -> np.ndarray:
    """Graph distances from source; unreachable vertices get UNREACHABLE."""
    if not (0 <= source < g.n):
        raise GraphError(f"source={source} not a vertex")
    return kernels.bfs(g.indptr, g.indices, int(source))


def ball_growth(g: DualGraph, root: Optional[int] = None, r_max: int = 50) -> dict[str, Any]:
    """Ball sizes |B(root, r)| for radii whose ball contains only core vertices.

    Returns the counts, the growth sequence |B|^(1/r) and the largest
    trustworthy radius.
    """
    root = g.root if root is None else root
    if not g.core[root]:
        raise GraphError(f"root={root} is not a core vertex")
    dist = bfs_distances(g, root)
    counts = []
    for r in range(0, r_max + 1):
        inball = (dist >= 0) & (dist <= r)
        if not np.all(g.core[inball]):
            break
        c = int(np.count_nonzero(inball))
        if counts and c == counts[-1]:
            break
        counts.append(c)
    growth = [1.0] + [c ** (1.0 / r) for r, c in enumerate(counts) if r > 0]
    return {"counts": counts, "growth": growth[:len(counts)], "max_radius": len(counts) - 1}


def boundary_volume(g: DualGraph, S: Iterable[int]) -> tuple[int, int]:
    """(|dS|, Vol(S)): edges with exactly one end in S, and the sum of degrees."""
    s = set(int(v) for v in S)
    vol = 0
    inside = 0
    for v in s:
        nb = g.neighbors(v)
        vol += len(nb)
        inside += sum(1 for w in nb.tolist() if w in s)
    return vol - inside, vol


@dataclass
class ExpansionReport:
    max_size: int
    per_size_min: list  # Fraction or None per size 1..m
    cumulative_min: list
    global_min: Optional[Fraction]
    witness: list[int]
    enumerated: int
    per_size_count: list[int]
    noncore_excluded: int

    def to_dict(self) -> dict[str, Any]:
        def fr(x):
            return None if x is None else [x.numerator, x.denominator]

        return {
            "max_size": self.max_size,
            "per_size_min": [fr(x) for x in self.per_size_min],
            "per_size_min_float": [None if x is None else float(x) for x in self.per_size_min],
            "cumulative_min": [fr(x) for x in self.cumulative_min],
            "global_min": fr(self.global_min),
            "global_min_float": None if self.global_min is None else float(self.global_min),
            "witness": list(self.witness),
            "enumerated": self.enumerated,
            "per_size_count": list(self.per_size_count),
            "noncore_excluded": self.noncore_excluded,
        }


def min_expansion(g: DualGraph, root: Optional[int] = None, m: int = 8) -> ExpansionReport:
    """Exact minimum of |dS|/Vol(S) over connected S containing root, |S| <= m.

    Subsets are enumerated once each by include/exclude branching on the
    frontier.  Subsets containing non-core vertices are never generated;
    ``noncore_excluded`` counts the branch points where a non-core vertex
    would have been added.
    """
    if m > MAX_EXPANSION_M:
        raise GuardError(f"m={m} exceeds the guard {MAX_EXPANSION_M}")
    if m < 1:
        raise GraphError(f"m={m} must be >= 1")
    root = g.root if root is None else int(root)
    if not (0 <= root < g.n):
        raise GraphError(f"root={root} not a vertex")
    res = kernels.expansion_scan(g.indptr, g.indices, g.core.astype(np.uint8), root, m)
    best_b, best_v, counts, witness, noncore = res
    per = []
    for s in range(1, m + 1):
        per.append(Fraction(int(best_b[s]), int(best_v[s])) if counts[s] and best_v[s] else None)
    cum = []
    cur = None
    for x in per:
        if x is not None and (cur is None or x < cur):
            cur = x
        cum.append(cur)
    gmin = cur
    wit = []
    if gmin is not None:
        size = next(s for s, x in enumerate(per, start=1) if x == gmin)
        wit = sorted(int(v) for v in witness[size][:size])
    return ExpansionReport(m, per, cum, gmin, wit, int(sum(counts)), [int(c) for c in counts[1:]], int(noncore))


def delta_i(g: DualGraph, S: Iterable[int], i) -> Fraction:
    """i|S| - |dS| as an exact rational."""
    s = set(int(v) for v in S)
    b, _ = boundary_volume(g, s)
    return Fraction(i) * len(s) - b


def is_isolated_core(g: DualGraph, S: Iterable[int], i) -> bool:
    """True iff Delta_i(S) > Delta_i(A) for every proper subset A (including the empty set)."""
    s = sorted(set(int(v) for v in S))
    if len(s) > MAX_CORE_SCAN:
        raise GuardError(f"|S|={len(s)} exceeds the guard {MAX_CORE_SCAN}")
    i = Fraction(i)
    full = delta_i(g, s, i)
    for k in range(0, len(s)):
        for sub in combinations(s, k):
            if not full > delta_i(g, sub, i):
                return False
    return True
