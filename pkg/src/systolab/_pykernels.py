"""Pure-Python/numpy versions of the hot loops.

Same algorithms, same tie-breaking and same argument conventions as the
compiled module ``systolab._ckernels``; used when the extension is not built
or when ``SYSTOLAB_PURE_PYTHON=1`` is set.
"""
import heapq
import math

import numpy as np


def _search(indptr, indices, weights, src, dst, bound, want_pred):
    n = len(indptr) - 1
    dist = [math.inf] * n
    done = [False] * n
    pred = [-1] * n if want_pred else None
    dist[src] = 0.0
    heap = [(0.0, src)]
    pop, push = heapq.heappop, heapq.heappush
    while heap:
        d, u = pop(heap)
        if done[u]:
            continue
        if d > bound:
            return math.inf, pred
        done[u] = True
        if u == dst:
            return d, pred
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if done[v]:
                continue
            nd = d + weights[k]
            if nd < dist[v]:
                dist[v] = nd
                if want_pred:
                    pred[v] = u
                push(heap, (nd, v))
    return math.inf, pred


def antipodal_lengths(indptr, indices, weights, partner, sources, bound=math.inf):
    indptr = np.asarray(indptr).tolist()
    indices = np.asarray(indices).tolist()
    weights = np.asarray(weights, dtype=float).tolist()
    partner = np.asarray(partner).tolist()
    out = np.empty(len(sources))
    best = bound
    for j, s in enumerate(np.asarray(sources).tolist()):
        length, _ = _search(indptr, indices, weights, s, partner[s], best, False)
        out[j] = length
        if length < best:
            best = length
    return out


def shortest_path(indptr, indices, weights, src, dst):
    length, pred = _search(
        np.asarray(indptr).tolist(),
        np.asarray(indices).tolist(),
        np.asarray(weights, dtype=float).tolist(),
        int(src),
        int(dst),
        math.inf,
        True,
    )
    if length == math.inf:
        raise ValueError(f"vertex {dst} is unreachable from {src}")
    path = [int(dst)]
    while path[-1] != src:
        path.append(pred[path[-1]])
    path.reverse()
    return length, np.asarray(path, dtype=np.intp)


def sh_series(points, cos_coef, sin_coef, a_tab, b_tab, mm_tab):
    points = np.asarray(points, dtype=float)
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    lmax = cos_coef.shape[0] - 1
    re = np.ones_like(z)
    im = np.zeros_like(z)
    acc = np.zeros_like(z)
    for m in range(lmax + 1):
        if m > 0:
            re, im = re * x - im * y, re * y + im * x
        col_c = cos_coef[m:, m]
        col_s = sin_coef[m:, m]
        if not (col_c.any() or col_s.any()):
            continue
        q2 = np.full_like(z, mm_tab[m])
        cterm = cos_coef[m, m] * q2
        sterm = sin_coef[m, m] * q2
        if m < lmax:
            q1 = a_tab[m + 1, m] * z * q2
            cterm = cterm + cos_coef[m + 1, m] * q1
            sterm = sterm + sin_coef[m + 1, m] * q1
            for l in range(m + 2, lmax + 1):
                q0 = a_tab[l, m] * (z * q1 - b_tab[l, m] * q2)
                cterm = cterm + cos_coef[l, m] * q0
                sterm = sterm + sin_coef[l, m] * q0
                q2, q1 = q1, q0
        acc = acc + cterm * re + sterm * im
    return acc
