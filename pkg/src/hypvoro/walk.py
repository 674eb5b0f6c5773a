"""Simple random walks on dual graphs and the statistics built from them."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np
from scipy import stats

from . import kernels, rng
from .graph import DualGraph, GraphError, bfs_distances
from .parallel import map_ordered

STEPS_EXHAUSTED = "steps_exhausted"
LEFT_CORE = "left_core"
ISOLATED = "isolated_root"
# a speed estimate is labeled valid only when fewer walks than this were excluded
MAX_EXCLUDED_FRACTION = 0.05


class WalkError(ValueError):
    pass


@dataclass(frozen=True)
class WalkTrace:
    """A walk X_0..X_k with graph distances and positions of the visited vertices."""

    vertices: np.ndarray
    dist: np.ndarray
    positions: Optional[np.ndarray]  # Poincare coordinates, complex
    stop: str

    def __len__(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def steps(self) -> int:
        return len(self) - 1

    @property
    def angles(self) -> Optional[np.ndarray]:
        """Boundary direction of each position (NaN at the origin)."""
        if self.positions is None:
            return None
        p = self.positions
        with np.errstate(invalid="ignore"):
            return np.where(np.abs(p) > 0, np.angle(p) % (2 * math.pi), np.nan)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "vertices": self.vertices.tolist(),
            "dist": self.dist.tolist(),
            "stop": self.stop,
        }
        if self.positions is not None:
            out["positions"] = [[z.real, z.imag] for z in self.positions.tolist()]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def _positions(g: DualGraph) -> Optional[np.ndarray]:
    if g.geometry is None or len(g.geometry) != g.n:
        return None
    rad, theta = g.geometry[:, 0], g.geometry[:, 1]
    return np.tanh(0.5 * rad) * np.exp(1j * theta)


def simple_walk(g: DualGraph, root: Optional[int] = None, max_steps: int = 100, seed: int = 0,
                walk_id: int = 0, dist: Optional[np.ndarray] = None,
                positions: Optional[np.ndarray] = None) -> WalkTrace:
    """Simple random walk from root; stops after max_steps or on entering a non-core vertex.

    Step j uses the uniform addressed by (seed, walk_id, root, j), so a
    trace never depends on which thread ran it.
    """
    root = g.root if root is None else int(root)
    if not (0 <= root < g.n):
        raise GraphError(f"root={root} not a vertex")
    if max_steps < 0:
        raise WalkError(f"max_steps={max_steps} must be >= 0")
    if dist is None:
        dist = bfs_distances(g, root)
    if positions is None:
        positions = _positions(g)
    if g.degree[root] == 0:
        path = np.array([root], dtype=np.int64)
        stop = ISOLATED
    else:
        u = rng.uniforms(seed, rng.WALK, 0, max_steps, 1, (walk_id, root))[:, 0]
        path, left = kernels.walk(g.indptr, g.indices, g.core.astype(np.uint8), root, u)
        stop = LEFT_CORE if left else STEPS_EXHAUSTED
    pos = None if positions is None else positions[path]
    return WalkTrace(path, dist[path], pos, stop)


def walk_ensemble(g: DualGraph, n_walks: int, max_steps: int, seed: int = 0,
                  root: Optional[int] = None, threads: Optional[int] = None) -> list[WalkTrace]:
    root = g.root if root is None else int(root)
    dist = bfs_distances(g, root)
    pos = _positions(g)
    return map_ordered(lambda w: simple_walk(g, root, max_steps, seed, w, dist, pos), range(n_walks), threads)


# -- implicit graphs --------------------------------------------------------------


class RegularTree:
    """The infinite d-regular tree, generated lazily.

    Vertices are tuples of child indices from the root; neighbors are listed
    parent first, then children.
    """

    def __init__(self, d: int):
        if d < 2:
            raise WalkError(f"d={d} must be >= 2")
        self.d = d

    def degree(self, v: tuple) -> int:
        return self.d

    def neighbor(self, v: tuple, k: int) -> tuple:
        if not v:
            return (k,)
        if k == 0:
            return v[:-1]
        return v + (k - 1,)

    @staticmethod
    def depth(v: tuple) -> int:
        return len(v)


def implicit_walk(graph, start, max_steps: int, seed: int, walk_id: int = 0,
                  dist_fn: Optional[Callable] = None) -> WalkTrace:
    """Walk on a lazily generated graph with the same neighbor rule as the kernels."""
    u = rng.uniforms(seed, rng.WALK, 0, max_steps, 1, (walk_id, 0))[:, 0]
    dist_fn = dist_fn or graph.depth
    v = start
    verts = [0]
    dist = [dist_fn(v)]
    for x in u.tolist():
        deg = graph.degree(v)
        k = min(int(x * deg), deg - 1)
        v = graph.neighbor(v, k)
        verts.append(len(verts))
        dist.append(dist_fn(v))
    return WalkTrace(np.array(verts, dtype=np.int64), np.array(dist, dtype=np.int64), None, STEPS_EXHAUSTED)


def tree_ensemble(d: int, n_walks: int, steps: int, seed: int = 0) -> list[WalkTrace]:
    tree = RegularTree(d)
    return [implicit_walk(tree, (), steps, seed, w) for w in range(n_walks)]


# -- statistics -------------------------------------------------------------------


@dataclass(frozen=True)
class SpeedEstimate:
    mean: float
    ci_low: float
    ci_high: float
    k_eval: int
    eligible: int
    excluded: int

    @property
    def excluded_fraction(self) -> float:
        total = self.eligible + self.excluded
        return self.excluded / total if total else 1.0

    @property
    def valid(self) -> bool:
        return self.excluded_fraction < MAX_EXCLUDED_FRACTION

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean, "ci": [self.ci_low, self.ci_high], "k_eval": self.k_eval,
                "eligible": self.eligible, "excluded": self.excluded, "valid": self.valid}


def speed_estimate(traces: Sequence[WalkTrace], k_eval: int, seed: int = 0,
                   n_boot: int = 2000, level: float = 0.95) -> SpeedEstimate:
    """Mean of d(root, X_k)/k at k = k_eval with a percentile bootstrap CI.

    Traces that stopped before step k_eval are excluded and counted.
    """
    if k_eval < 1:
        raise WalkError(f"k_eval={k_eval} must be >= 1")
    vals = [t.dist[k_eval] / k_eval for t in traces if len(t) > k_eval]
    excluded = len(traces) - len(vals)
    if not vals:
        raise WalkError(f"no trace reached k_eval={k_eval}")
    x = np.asarray(vals, dtype=np.float64)
    mean = float(x.mean())
    if len(x) > 1 and np.ptp(x) > 0:
        res = stats.bootstrap((x,), np.mean, n_resamples=n_boot, confidence_level=level,
                              method="percentile", random_state=rng.generator(seed, rng.BOOT, k_eval))
        lo, hi = float(res.confidence_interval.low), float(res.confidence_interval.high)
    else:
        lo = hi = mean
    return SpeedEstimate(mean, lo, hi, int(k_eval), len(vals), excluded)


def choose_k_eval(traces: Sequence[WalkTrace], keep: float = 0.95) -> int:
    """Largest k such that at least a fraction keep of the traces reach step k."""
    lengths = np.sort(np.array([t.steps for t in traces]))
    if len(lengths) == 0:
        raise WalkError("no traces")
    idx = int(math.floor((1.0 - keep) * len(lengths)))
    return int(lengths[min(idx, len(lengths) - 1)])


def oscillation_profile(trace: WalkTrace) -> np.ndarray:
    """osc[k0 - 1] = max over j, l >= k0 of |theta_j - theta_l| (unit vectors), k0 = 1..k.

    Step 0 is skipped; so is any step at the origin, where no direction exists.
    """
    if trace.positions is None:
        raise WalkError("trace has no geometric labels")
    p = trace.positions[1:]
    if len(p) == 0:
        return np.zeros(0)
    ok = np.abs(p) > 0
    u = np.where(ok, p / np.where(ok, np.abs(p), 1.0), 0)
    L = len(u)
    osc = np.zeros(L)
    cur = 0.0
    for i in range(L - 1, -1, -1):
        if ok[i]:
            tail = u[i:][ok[i:]]
            cur = max(cur, float(np.abs(tail - u[i]).max()))
        osc[i] = cur
    return osc


boundary_convergence = oscillation_profile


def harmonic_measure(traces: Sequence[WalkTrace], bins: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of terminal directions on the circle: (bin centers, mass), mass summing to 1."""
    if bins < 1:
        raise WalkError(f"bins={bins} must be >= 1")
    ang = []
    for t in traces:
        a = t.angles
        if a is None:
            raise WalkError("trace has no geometric labels")
        if len(a) and not np.isnan(a[-1]):
            ang.append(a[-1])
    if not ang:
        raise WalkError("no trace has a terminal direction")
    edges = np.linspace(0.0, 2 * math.pi, bins + 1)
    counts, _ = np.histogram(np.asarray(ang) % (2 * math.pi), bins=edges)
    mass = counts / counts.sum()
    return 0.5 * (edges[:-1] + edges[1:]), mass


def histogram_csv(centers: np.ndarray, mass: np.ndarray) -> str:
    lines = ["angle_bin_center,mass"]
    lines += [f"{c!r},{m!r}" for c, m in zip(centers.tolist(), mass.tolist())]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ReversibilityResult:
    tv: float
    trials: int
    joint: dict

    def to_dict(self) -> dict[str, Any]:
        return {"tv": self.tv, "trials": self.trials,
                "joint": [[a, b, c] for (a, b), c in sorted(self.joint.items())]}


def joint_tv(joint: dict[tuple[int, int], float]) -> float:
    """Total variation between a law on pairs and its transpose."""
    total = sum(joint.values())
    keys = set(joint) | {(b, a) for a, b in joint}
    return 0.5 * sum(abs(joint.get((a, b), 0) - joint.get((b, a), 0)) for a, b in keys) / total


def reversibility_test(graphs: Sequence[DualGraph], trials: int, seed: int = 0,
                       degree_biased: bool = True) -> ReversibilityResult:
    """TV distance between the law of (deg X_0, deg X_1) and its transpose.

    Trial t picks a graph uniformly, a core root with probability
    proportional to degree (or uniformly when degree_biased=False), and
    one uniform step.
    """
    if not graphs:
        raise WalkError("no graphs")
    pools = []
    for g in graphs:
        cand = np.flatnonzero(g.core & (g.degree > 0))
        if len(cand) == 0:
            raise WalkError("graph has no core vertex with a neighbor")
        w = g.degree[cand].astype(np.float64) if degree_biased else np.ones(len(cand))
        pools.append((cand, np.cumsum(w) / w.sum()))
    u = rng.uniforms(seed, rng.MC, 0, trials, 3, (int(degree_biased),))
    which = np.minimum((u[:, 0] * len(graphs)).astype(np.int64), len(graphs) - 1)
    joint: dict[tuple[int, int], int] = {}
    for gi in range(len(graphs)):
        sel = np.flatnonzero(which == gi)
        if len(sel) == 0:
            continue
        g = graphs[gi]
        cand, cdf = pools[gi]
        x0 = cand[np.minimum(np.searchsorted(cdf, u[sel, 1], side="right"), len(cand) - 1)]
        deg0 = g.degree[x0]
        k = np.minimum((u[sel, 2] * deg0).astype(np.int64), deg0 - 1)
        x1 = g.indices[g.indptr[x0] + k]
        pairs = np.column_stack([deg0, g.degree[x1]])
        keys, counts = np.unique(pairs, axis=0, return_counts=True)
        for (a, b), c in zip(keys.tolist(), counts.tolist()):
            joint[(a, b)] = joint.get((a, b), 0) + c
    return ReversibilityResult(joint_tv(joint), int(trials), joint)


def star_graph(leaves: int) -> DualGraph:
    adj = [list(range(1, leaves + 1))] + [[0] for _ in range(leaves)]
    return DualGraph.from_adjacency(adj, root=0)


def star_tv_exact(leaves: int, degree_biased: bool) -> float:
    """Exact TV statistic on the star with the given number of leaves."""
    if degree_biased:
        p_center = leaves / (2.0 * leaves)
    else:
        p_center = 1.0 / (leaves + 1)
    joint = {(leaves, 1): p_center, (1, leaves): 1.0 - p_center}
    if leaves == 1:
        return 0.0
    return joint_tv(joint)


__all__ = [
    "WalkTrace", "SpeedEstimate", "ReversibilityResult", "RegularTree", "simple_walk", "walk_ensemble",
    "implicit_walk", "tree_ensemble", "speed_estimate", "choose_k_eval", "oscillation_profile",
    "boundary_convergence", "harmonic_measure", "histogram_csv", "reversibility_test", "joint_tv",
    "star_graph", "star_tv_exact",
]
