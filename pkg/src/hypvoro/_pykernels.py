"""Pure-Python implementations of the hot kernels.

Same signatures and results as the compiled module ``_ckernels``; used
when the extension is not built or when HYPVORO_PURE=1.
"""
from __future__ import annotations

from collections import deque

import numpy as np


def bfs(indptr, indices, source):
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    ip = indptr.tolist()
    ix = indices.tolist()
    d = [-1] * n
    d[source] = 0
    q = deque([source])
    while q:
        u = q.popleft()
        du = d[u] + 1
        for k in range(ip[u], ip[u + 1]):
            w = ix[k]
            if d[w] < 0:
                d[w] = du
                q.append(w)
    dist[:] = d
    return dist


def expansion_scan(indptr, indices, core, root, m):
    """Enumerate connected vertex sets containing root of size <= m.

    Returns (best_boundary, best_volume, counts, witness, noncore) where
    index s of the first three arrays refers to sets of size s, and
    witness[s] lists a set attaining the per-size minimum of
    boundary/volume.  Sets with non-core vertices are not generated.
    """
    ip = indptr.tolist()
    ix = indices.tolist()
    corel = core.tolist()
    best_b = [0] * (m + 1)
    best_v = [0] * (m + 1)
    counts = [0] * (m + 1)
    witness = np.zeros((m + 1, m), dtype=np.int64)
    state = {"noncore": 0}
    mark = {}  # 1 = in S, 2 = seen (candidate or excluded)
    S = []

    def record(b, vol):
        s = len(S)
        counts[s] += 1
        if counts[s] == 1 or b * best_v[s] < best_b[s] * vol:
            best_b[s] = b
            best_v[s] = vol
            witness[s, :s] = S

    def add(v, b, vol):
        inside = 0
        for k in range(ip[v], ip[v + 1]):
            if mark.get(ix[k]) == 1:
                inside += 1
        deg = ip[v + 1] - ip[v]
        return b + deg - 2 * inside, vol + deg

    def rec(ext, b, vol):
        record(b, vol)
        if len(S) == m:
            return
        ext = list(ext)
        while ext:
            v = ext.pop()
            nb, nvol = add(v, b, vol)
            S.append(v)
            mark[v] = 1
            new = []
            for k in range(ip[v], ip[v + 1]):
                w = ix[k]
                if w in mark:
                    continue
                if not corel[w]:
                    state["noncore"] += 1
                    continue
                mark[w] = 2
                new.append(w)
            rec(ext + new, nb, nvol)
            for w in new:
                del mark[w]
            mark[v] = 2
            S.pop()

    if not corel[root]:
        return (np.array(best_b, dtype=np.int64), np.array(best_v, dtype=np.int64),
                np.array(counts, dtype=np.int64), witness, 1)
    S.append(root)
    mark[root] = 1
    ext = []
    for k in range(ip[root], ip[root + 1]):
        w = ix[k]
        if w == root or w in mark:
            continue
        if not corel[w]:
            state["noncore"] += 1
            continue
        mark[w] = 2
        ext.append(w)
    deg = ip[root + 1] - ip[root]
    rec(ext, deg, deg)
    return (np.array(best_b, dtype=np.int64), np.array(best_v, dtype=np.int64),
            np.array(counts, dtype=np.int64), witness, state["noncore"])


def walk(indptr, indices, core, start, u):
    """Simple random walk driven by the uniforms u (one per step).

    Stops after len(u) steps or on entering a non-core vertex.  Returns
    (path, left_core).
    """
    ip = indptr
    path = [int(start)]
    v = int(start)
    left = False
    for x in u.tolist():
        lo = int(ip[v])
        deg = int(ip[v + 1]) - lo
        if deg == 0:
            break
        k = int(x * deg)
        if k >= deg:
            k = deg - 1
        v = int(indices[lo + k])
        path.append(v)
        if not core[v]:
            left = True
            break
    return np.array(path, dtype=np.int64), left
