# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: BFS, connected-subset expansion scan, random walk."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()

ctypedef long long i64


def bfs(cnp.ndarray indptr_a, cnp.ndarray indices_a, i64 source):
    cdef i64[::1] indptr = np.ascontiguousarray(indptr_a, dtype=np.int64)
    cdef i64[::1] indices = np.ascontiguousarray(indices_a, dtype=np.int64)
    cdef i64 n = indptr.shape[0] - 1
    dist_a = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] dist = dist_a
    queue_a = np.empty(max(n, 1), dtype=np.int64)
    cdef i64[::1] queue = queue_a
    cdef i64 head = 0, tail = 0, u, k, w
    with nogil:
        dist[source] = 0
        queue[tail] = source
        tail += 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue[tail] = w
                    tail += 1
    return dist_a


cdef struct Scan:
    i64* indptr
    i64* indices
    unsigned char* core
    unsigned char* mark      # 1 in S, 2 seen
    i64* ext                 # stack of candidate segments
    i64* S
    i64 size
    i64 m
    i64* best_b
    i64* best_v
    i64* counts
    i64* witness             # (m+1) x m
    i64 noncore


cdef void _record(Scan* st, i64 b, i64 vol) noexcept nogil:
    cdef i64 s = st.size, k
    st.counts[s] += 1
    if st.counts[s] == 1 or b * st.best_v[s] < st.best_b[s] * vol:
        st.best_b[s] = b
        st.best_v[s] = vol
        for k in range(s):
            st.witness[s * st.m + k] = st.S[k]


cdef void _rec(Scan* st, i64 start, i64 length, i64 b, i64 vol) noexcept nogil:
    cdef i64 v, k, w, inside, deg, nb, nvol, cstart, clen, i
    # child segments go past the whole parent segment so the new-neighbor
    # tail survives grandchildren for the unmark pass
    cdef i64 top = start + length
    _record(st, b, vol)
    if st.size == st.m:
        return
    while length > 0:
        length -= 1
        v = st.ext[start + length]
        inside = 0
        for k in range(st.indptr[v], st.indptr[v + 1]):
            if st.mark[st.indices[k]] == 1:
                inside += 1
        deg = st.indptr[v + 1] - st.indptr[v]
        nb = b + deg - 2 * inside
        nvol = vol + deg
        st.S[st.size] = v
        st.size += 1
        st.mark[v] = 1
        # child segment: remaining candidates, then new neighbors of v
        cstart = top
        for i in range(length):
            st.ext[cstart + i] = st.ext[start + i]
        clen = length
        for k in range(st.indptr[v], st.indptr[v + 1]):
            w = st.indices[k]
            if st.mark[w] != 0:
                continue
            if st.core[w] == 0:
                st.noncore += 1
                continue
            st.mark[w] = 2
            st.ext[cstart + clen] = w
            clen += 1
        _rec(st, cstart, clen, nb, nvol)
        for i in range(length, clen):
            st.mark[st.ext[cstart + i]] = 0
        st.mark[v] = 2
        st.size -= 1


def expansion_scan(cnp.ndarray indptr_a, cnp.ndarray indices_a, cnp.ndarray core_a, i64 root, i64 m):
    cdef i64[::1] indptr = np.ascontiguousarray(indptr_a, dtype=np.int64)
    cdef i64[::1] indices = np.ascontiguousarray(indices_a, dtype=np.int64)
    cdef unsigned char[::1] core = np.ascontiguousarray(core_a, dtype=np.uint8)
    cdef i64 n = indptr.shape[0] - 1
    best_b_a = np.zeros(m + 1, dtype=np.int64)
    best_v_a = np.zeros(m + 1, dtype=np.int64)
    counts_a = np.zeros(m + 1, dtype=np.int64)
    witness_a = np.zeros((m + 1, m), dtype=np.int64)
    cdef i64[::1] best_b = best_b_a
    cdef i64[::1] best_v = best_v_a
    cdef i64[::1] counts = counts_a
    cdef i64[:, ::1] witness = witness_a
    if core[root] == 0:
        return best_b_a, best_v_a, counts_a, witness_a, 1
    cdef i64 maxdeg = int(np.max(np.diff(np.asarray(indptr)))) if n > 0 else 0
    cdef i64 cap = (m + 2) * (m * maxdeg + 2)
    cdef Scan st
    mark_a = np.zeros(n, dtype=np.uint8)
    ext_a = np.zeros(cap, dtype=np.int64)
    S_a = np.zeros(m + 1, dtype=np.int64)
    cdef unsigned char[::1] mark = mark_a
    cdef i64[::1] ext = ext_a
    cdef i64[::1] S = S_a
    st.indptr = &indptr[0]
    st.indices = &indices[0] if indices.shape[0] > 0 else NULL
    st.core = &core[0]
    st.mark = &mark[0]
    st.ext = &ext[0]
    st.S = &S[0]
    st.size = 1
    st.m = m
    st.best_b = &best_b[0]
    st.best_v = &best_v[0]
    st.counts = &counts[0]
    st.witness = &witness[0, 0]
    st.noncore = 0
    cdef i64 k, w, clen = 0, deg
    with nogil:
        S[0] = root
        mark[root] = 1
        for k in range(indptr[root], indptr[root + 1]):
            w = indices[k]
            if mark[w] != 0:
                continue
            if core[w] == 0:
                st.noncore += 1
                continue
            mark[w] = 2
            ext[clen] = w
            clen += 1
        deg = indptr[root + 1] - indptr[root]
        _rec(&st, 0, clen, deg, deg)
    return best_b_a, best_v_a, counts_a, witness_a, st.noncore


def walk(cnp.ndarray indptr_a, cnp.ndarray indices_a, cnp.ndarray core_a, i64 start, cnp.ndarray u_a):
    cdef i64[::1] indptr = np.ascontiguousarray(indptr_a, dtype=np.int64)
    cdef i64[::1] indices = np.ascontiguousarray(indices_a, dtype=np.int64)
    cdef unsigned char[::1] core = np.ascontiguousarray(core_a, dtype=np.uint8)
    cdef double[::1] u = np.ascontiguousarray(u_a, dtype=np.float64)
    cdef i64 steps = u.shape[0]
    path_a = np.empty(steps + 1, dtype=np.int64)
    cdef i64[::1] path = path_a
    cdef i64 v = start, j, lo, deg, k, length = 1
    cdef bint left = False
    with nogil:
        path[0] = v
        for j in range(steps):
            lo = indptr[v]
            deg = indptr[v + 1] - lo
            if deg == 0:
                break
            k = <i64>(u[j] * deg)
            if k >= deg:
                k = deg - 1
            v = indices[lo + k]
            path[length] = v
            length += 1
            if core[v] == 0:
                left = True
                break
    return path_a[:length].copy(), bool(left)
