# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the two hot loops.

``antipodal_lengths`` runs one label-setting shortest-path search per source
vertex; ``sh_series`` evaluates a real spherical-harmonic series. Both mirror
``systolab._pykernels`` operation for operation, including heap tie-breaking,
so the two backends return identical paths.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


cdef inline bint _less(double da, Py_ssize_t va, double db, Py_ssize_t vb) noexcept nogil:
    return da < db or (da == db and va < vb)


cdef inline void _push(double[::1] hd, Py_ssize_t[::1] hv, Py_ssize_t* size,
                       double d, Py_ssize_t v) noexcept nogil:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _less(d, v, hd[parent], hv[parent]):
            hd[i] = hd[parent]
            hv[i] = hv[parent]
            i = parent
        else:
            break
    hd[i] = d
    hv[i] = v


cdef inline void _pop(double[::1] hd, Py_ssize_t[::1] hv, Py_ssize_t* size,
                      double* d_out, Py_ssize_t* v_out) noexcept nogil:
    cdef Py_ssize_t n, i, child
    cdef double d
    cdef Py_ssize_t v
    d_out[0] = hd[0]
    v_out[0] = hv[0]
    size[0] -= 1
    n = size[0]
    if n == 0:
        return
    d = hd[n]
    v = hv[n]
    i = 0
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and _less(hd[child + 1], hv[child + 1], hd[child], hv[child]):
            child += 1
        if _less(hd[child], hv[child], d, v):
            hd[i] = hd[child]
            hv[i] = hv[child]
            i = child
        else:
            break
    hd[i] = d
    hv[i] = v


cdef double _search(const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] indices,
                    const double[::1] weights, Py_ssize_t src, Py_ssize_t dst,
                    double bound, double[::1] dist, Py_ssize_t[::1] pred,
                    unsigned char[::1] done, double[::1] hd, Py_ssize_t[::1] hv,
                    bint want_pred) noexcept nogil:
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t i, k, u, v
    cdef Py_ssize_t size = 0
    cdef double d, nd
    for i in range(n):
        dist[i] = INFINITY
        done[i] = 0
        if want_pred:
            pred[i] = -1
    dist[src] = 0.0
    _push(hd, hv, &size, 0.0, src)
    while size > 0:
        _pop(hd, hv, &size, &d, &u)
        if done[u]:
            continue
        if d > bound:
            return INFINITY
        done[u] = 1
        if u == dst:
            return d
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if done[v]:
                continue
            nd = d + weights[k]
            if nd < dist[v]:
                dist[v] = nd
                if want_pred:
                    pred[v] = u
                _push(hd, hv, &size, nd, v)
    return INFINITY


def antipodal_lengths(indptr, indices, weights, partner, sources, double bound=INFINITY):
    """Shortest-path length from each source to its antipodal partner.

    Sources are scanned in the given order with a running bound: a search is
    abandoned (length reported as ``inf``) once it pops a label strictly
    larger than the best length found so far. Ties are never pruned.
    """
    cdef const Py_ssize_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.intp)
    cdef const Py_ssize_t[::1] ix = np.ascontiguousarray(indices, dtype=np.intp)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const Py_ssize_t[::1] sg = np.ascontiguousarray(partner, dtype=np.intp)
    cdef const Py_ssize_t[::1] src = np.ascontiguousarray(sources, dtype=np.intp)
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef Py_ssize_t m = ix.shape[0]
    cdef Py_ssize_t ns = src.shape[0]
    out_arr = np.empty(ns, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] dist = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t[::1] pred = np.empty(1, dtype=np.intp)
    cdef unsigned char[::1] done = np.empty(n, dtype=np.uint8)
    cdef double[::1] hd = np.empty(m + n + 1, dtype=np.float64)
    cdef Py_ssize_t[::1] hv = np.empty(m + n + 1, dtype=np.intp)
    cdef Py_ssize_t j
    cdef double best = bound
    cdef double length
    with nogil:
        for j in range(ns):
            length = _search(ip, ix, w, src[j], sg[src[j]], best, dist, pred, done,
                             hd, hv, False)
            out[j] = length
            if length < best:
                best = length
    return out_arr


def shortest_path(indptr, indices, weights, Py_ssize_t src, Py_ssize_t dst):
    """Return ``(length, path)`` of a shortest path from ``src`` to ``dst``."""
    cdef const Py_ssize_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.intp)
    cdef const Py_ssize_t[::1] ix = np.ascontiguousarray(indices, dtype=np.intp)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef Py_ssize_t m = ix.shape[0]
    cdef double[::1] dist = np.empty(n, dtype=np.float64)
    pred_arr = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] pred = pred_arr
    cdef unsigned char[::1] done = np.empty(n, dtype=np.uint8)
    cdef double[::1] hd = np.empty(m + n + 1, dtype=np.float64)
    cdef Py_ssize_t[::1] hv = np.empty(m + n + 1, dtype=np.intp)
    cdef double length
    with nogil:
        length = _search(ip, ix, w, src, dst, INFINITY, dist, pred, done, hd, hv, True)
    if length == INFINITY:
        raise ValueError(f"vertex {dst} is unreachable from {src}")
    cdef Py_ssize_t cur = dst
    path = [cur]
    while cur != src:
        cur = pred[cur]
        path.append(cur)
    path.reverse()
    return length, np.asarray(path, dtype=np.intp)


def sh_series(points, cos_coef, sin_coef, a_tab, b_tab, mm_tab):
    """Evaluate ``sum_lm C[l,m] Q_lm(z) Re((x+iy)^m) + S[l,m] Q_lm(z) Im((x+iy)^m)``.

    ``Q_lm`` are the normalized associated-Legendre polynomials produced by the
    three-term recurrence with coefficients ``a_tab``/``b_tab`` seeded by the
    sectoral values ``mm_tab``.
    """
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(cos_coef, dtype=np.float64)
    cdef const double[:, ::1] S = np.ascontiguousarray(sin_coef, dtype=np.float64)
    cdef const double[:, ::1] A = np.ascontiguousarray(a_tab, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(b_tab, dtype=np.float64)
    cdef const double[::1] MM = np.ascontiguousarray(mm_tab, dtype=np.float64)
    cdef Py_ssize_t npts = p.shape[0]
    cdef Py_ssize_t lmax = C.shape[0] - 1
    out_arr = np.zeros(npts, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, l, m
    cdef double x, y, z, re, im, tmp, q0, q1, q2, acc, cterm, sterm
    with nogil:
        for i in range(npts):
            x = p[i, 0]
            y = p[i, 1]
            z = p[i, 2]
            re = 1.0
            im = 0.0
            acc = 0.0
            for m in range(lmax + 1):
                if m > 0:
                    tmp = re * x - im * y
                    im = re * y + im * x
                    re = tmp
                q2 = MM[m]
                cterm = C[m, m] * q2
                sterm = S[m, m] * q2
                if m < lmax:
                    q1 = A[m + 1, m] * z * q2
                    cterm = cterm + C[m + 1, m] * q1
                    sterm = sterm + S[m + 1, m] * q1
                    for l in range(m + 2, lmax + 1):
                        q0 = A[l, m] * (z * q1 - B[l, m] * q2)
                        cterm = cterm + C[l, m] * q0
                        sterm = sterm + S[l, m] * q0
                        q2 = q1
                        q1 = q0
                acc = acc + cterm * re + sterm * im
            out[i] = acc
    return out_arr
