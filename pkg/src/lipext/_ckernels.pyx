# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; signatures mirror ``lipext._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND_NAME = "cython"

cdef enum:
    COARSE_STRIDE = 16


def max_pair_ratio(X, U):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], dn = x.shape[1], dm = u.shape[1]
    cdef Py_ssize_t i, j, a
    cdef double dx, du, t, r
    cdef double best = 0.0
    cdef Py_ssize_t bi = -1, bj = -1
    for i in range(n - 1):
        for j in range(i + 1, n):
            dx = 0.0
            for a in range(dn):
                t = x[i, a] - x[j, a]
                dx += t * t
            du = 0.0
            for a in range(dm):
                t = u[i, a] - u[j, a]
                du += t * t
            if dx > 0.0:
                r = sqrt(du) / sqrt(dx)
            elif du > 0.0:
                r = INFINITY
            else:
                r = 0.0
            if r > best:
                best = r
                bi = i
                bj = j
    return best, bi, bj


cdef inline double _point_value(double* p, const double[:, ::1] c, const double[::1] r2,
                                Py_ssize_t d, double cutoff) noexcept nogil:
    # max_i |p - c_i|^2 - r_i^2, abandoning early once above cutoff
    cdef Py_ssize_t i, a, k = c.shape[0]
    cdef double t, s, m = -INFINITY
    for i in range(k):
        s = -r2[i]
        for a in range(d):
            t = p[a] - c[i, a]
            s += t * t
        if s > m:
            m = s
            if m >= cutoff:
                return m
    return m


def grid_min(centers, radii2, lo, step, counts):
    cdef const double[:, ::1] c = np.ascontiguousarray(centers, dtype=np.float64)
    cdef const double[::1] r2 = np.ascontiguousarray(radii2, dtype=np.float64)
    cdef const double[::1] lo_ = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double h = step
    cdef Py_ssize_t d = len(counts)
    cdef Py_ssize_t cnt[3]
    cdef Py_ssize_t a, i0, i1, i2, k = c.shape[0], b
    cdef double p[3]
    cdef double best = INFINITY, val, lb, s, t
    cdef Py_ssize_t best_flat = 0, flat
    if d < 1 or d > 3:
        raise ValueError("grid_min supports 1 to 3 axes")
    for a in range(3):
        cnt[a] = 1
    # pad leading axes so the last real axis is always index 2
    for a in range(d):
        cnt[3 - d + a] = counts[a]
    cdef double lo3[3]
    for a in range(3):
        lo3[a] = 0.0
    for a in range(d):
        lo3[3 - d + a] = lo_[a]

    with nogil:
        # strided pass seeds the incumbent
        i0 = 0
        while i0 < cnt[0]:
            i1 = 0
            while i1 < cnt[1]:
                i2 = 0
                while i2 < cnt[2]:
                    p[0] = lo3[0] + h * i0
                    p[1] = lo3[1] + h * i1
                    p[2] = lo3[2] + h * i2
                    val = _point_value(&p[3 - d], c, r2, d, best)
                    if val < best:
                        best = val
                        best_flat = (i0 * cnt[1] + i1) * cnt[2] + i2
                    i2 += COARSE_STRIDE
                i1 += COARSE_STRIDE
            i0 += COARSE_STRIDE

        for i0 in range(cnt[0]):
            p[0] = lo3[0] + h * i0
            for i1 in range(cnt[1]):
                p[1] = lo3[1] + h * i1
                # row lower bound from the fixed leading coordinates
                lb = -INFINITY
                for b in range(k):
                    s = -r2[b]
                    for a in range(3 - d, 2):
                        t = p[a] - c[b, a - (3 - d)]
                        s += t * t
                    if s > lb:
                        lb = s
                if lb >= best:
                    continue
                for i2 in range(cnt[2]):
                    p[2] = lo3[2] + h * i2
                    val = _point_value(&p[3 - d], c, r2, d, best)
                    if val < best:
                        best = val
                        best_flat = (i0 * cnt[1] + i1) * cnt[2] + i2
    return best, best_flat


cdef struct HeapItem:
    double key
    Py_ssize_t node


cdef inline void _heap_push(HeapItem* heap, Py_ssize_t* size, double key,
                            Py_ssize_t node) noexcept nogil:
    cdef Py_ssize_t i = size[0], parent
    cdef HeapItem tmp
    size[0] += 1
    heap[i].key = key
    heap[i].node = node
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent].key <= heap[i].key:
            break
        tmp = heap[parent]
        heap[parent] = heap[i]
        heap[i] = tmp
        i = parent


cdef inline HeapItem _heap_pop(HeapItem* heap, Py_ssize_t* size) noexcept nogil:
    cdef HeapItem top = heap[0], tmp
    cdef Py_ssize_t i = 0, l, r, m, n
    size[0] -= 1
    n = size[0]
    heap[0] = heap[n]
    while True:
        l = 2 * i + 1
        r = l + 1
        m = i
        if l < n and heap[l].key < heap[m].key:
            m = l
        if r < n and heap[r].key < heap[m].key:
            m = r
        if m == i:
            break
        tmp = heap[m]
        heap[m] = heap[i]
        heap[i] = tmp
        i = m
    return top


def dijkstra(indptr, indices, weights, Py_ssize_t source, mask=None):
    cdef const cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    out = np.full(n, np.inf)
    cdef double[::1] dist = out
    cdef const cnp.uint8_t[::1] mk
    cdef bint use_mask = mask is not None
    if use_mask:
        mk = np.ascontiguousarray(mask, dtype=np.uint8)
        if not mk[source]:
            return out
    cdef cnp.uint8_t[::1] done = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t cap = ix.shape[0] + 1, size = 0, e, v
    cdef HeapItem* heap = <HeapItem*> malloc(cap * sizeof(HeapItem))
    cdef HeapItem item
    cdef double nd
    if heap == NULL:
        raise MemoryError()
    try:
        with nogil:
            dist[source] = 0.0
            _heap_push(heap, &size, 0.0, source)
            while size > 0:
                item = _heap_pop(heap, &size)
                if done[item.node]:
                    continue
                done[item.node] = 1
                for e in range(ip[item.node], ip[item.node + 1]):
                    v = ix[e]
                    if done[v]:
                        continue
                    if use_mask and not mk[v]:
                        continue
                    nd = item.key + w[e]
                    if nd < dist[v]:
                        dist[v] = nd
                        _heap_push(heap, &size, nd, v)
    finally:
        free(heap)
    return out


def polyak_warm_start(centers, radii2, z0, Py_ssize_t iters):
    cdef const double[:, ::1] c = np.ascontiguousarray(centers, dtype=np.float64)
    cdef const double[::1] r2 = np.ascontiguousarray(radii2, dtype=np.float64)
    cdef Py_ssize_t k = c.shape[0], m = c.shape[1]
    z_arr = np.array(z0, dtype=np.float64)
    zb_arr = z_arr.copy()
    acc_arr = np.zeros(k)
    lam_arr = np.zeros(k)
    b_arr = np.zeros(k)
    y_arr = np.zeros(m)
    cdef double[::1] z = z_arr, zb = zb_arr, acc = acc_arr, lam = lam_arr
    cdef double[::1] b = b_arr, y = y_arr
    cdef Py_ssize_t it, i, a, imax
    cdef double f, s, t, gn2, alpha, lower = -INFINITY, f_best = INFINITY
    cdef double wsum = 0.0, dual
    for i in range(k):
        s = 0.0
        for a in range(m):
            s += c[i, a] * c[i, a]
        b[i] = s - r2[i]
        if -r2[i] > lower:
            lower = -r2[i]
    lam[0] = 1.0
    with nogil:
        for it in range(iters):
            f = -INFINITY
            imax = 0
            for i in range(k):
                s = -r2[i]
                for a in range(m):
                    t = z[a] - c[i, a]
                    s += t * t
                if s > f:
                    f = s
                    imax = i
            if f < f_best:
                f_best = f
                for a in range(m):
                    zb[a] = z[a]
            gn2 = 0.0
            for a in range(m):
                t = 2.0 * (z[a] - c[imax, a])
                gn2 += t * t
            if gn2 == 0.0 or f - lower <= 0.0:
                break
            alpha = (f - lower) / gn2
            acc[imax] += alpha
            wsum += alpha
            for a in range(m):
                y[a] = 0.0
            dual = 0.0
            for i in range(k):
                lam[i] = acc[i] / wsum
                dual += lam[i] * b[i]
                for a in range(m):
                    y[a] += lam[i] * c[i, a]
            for a in range(m):
                dual -= y[a] * y[a]
            if dual > lower:
                lower = dual
            for a in range(m):
                z[a] -= alpha * 2.0 * (z[a] - c[imax, a])
    return zb_arr, f_best, lam_arr
