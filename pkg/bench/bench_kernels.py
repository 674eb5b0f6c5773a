"""Compare the compiled kernels with the pure-Python fallback.

Both implementations run on the same Voronoi dual graph, their outputs are
checked for equality, and the best-of-N wall time of each is printed.

    python bench/bench_kernels.py [--radius-h 10] [--m 8] [--repeat 3] [--json out.json]
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from hypvoro import _pykernels, condition_root, delaunay, dual_voronoi_graph, rng, sample_ball

try:
    from hypvoro import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def same(a, b) -> bool:
    if isinstance(a, (tuple, list)):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    return a == b


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambda", dest="lam", type=float, default=1.0)
    ap.add_argument("--radius-h", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--walks", type=int, default=200)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    a = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled kernels are not built; run pip install -e . --no-build-isolation")

    g = dual_voronoi_graph(delaunay(condition_root(sample_ball(a.lam, a.radius_h, a.seed))))
    core = g.core.astype(np.uint8)
    u = rng.uniforms(a.seed, rng.WALK, 0, a.walks * a.steps, 1)[:, 0].reshape(a.walks, a.steps)
    everywhere = np.ones(g.n, dtype=np.uint8)
    cases = {
        "bfs": lambda k: k.bfs(g.indptr, g.indices, g.root),
        "walks": lambda k: [k.walk(g.indptr, g.indices, everywhere, g.root, u[i]) for i in range(a.walks)],
        f"expansion_m{a.m}": lambda k: k.expansion_scan(g.indptr, g.indices, core, g.root, a.m),
    }
    rows = []
    print(f"graph: {g.n} vertices, {len(g.indices) // 2} edges, {int(g.core.sum())} core")
    print(f"{'kernel':<16}{'compiled s':>12}{'python s':>12}{'speedup':>10}  equal")
    for name, fn in cases.items():
        tc, oc = best_of(lambda: fn(_ckernels), a.repeat)
        tp, op = best_of(lambda: fn(_pykernels), a.repeat)
        eq = same(oc, op)
        rows.append({"kernel": name, "compiled_s": tc, "python_s": tp, "speedup": tp / tc, "equal": eq})
        print(f"{name:<16}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {eq}")
    if a.json:
        with open(a.json, "w") as fh:
            json.dump({"n": g.n, "args": vars(a), "results": rows}, fh, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
