# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in ``_fallback``.

Same contract: per-covariate squared distance accumulation in covariate
order, lowest-index tie-breaks, greedy consumption. Float64 operations
run in the same order as the numpy fallback so integer outputs agree
bit-for-bit across backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def knn_indices(train, query, Py_ssize_t k):
    """Indices of the k nearest training rows for each query row."""
    cdef double[:, ::1] tr = np.ascontiguousarray(train, dtype=np.float64)
    cdef double[:, ::1] qu = np.ascontiguousarray(query, dtype=np.float64)
    cdef Py_ssize_t n = tr.shape[0], p = tr.shape[1], m = qu.shape[0]
    out = np.empty((m, k), dtype=np.int64)
    cdef long long[:, ::1] out_v = out
    best_d_arr = np.empty(k, dtype=np.float64)
    best_i_arr = np.empty(k, dtype=np.int64)
    cdef double[::1] best_d = best_d_arr
    cdef long long[::1] best_i = best_i_arr
    cdef Py_ssize_t i, j, l, count, pos, s
    cdef double acc, diff

    with nogil:
        for i in range(m):
            count = 0
            for j in range(n):
                acc = 0.0
                for l in range(p):
                    diff = qu[i, l] - tr[j, l]
                    acc += diff * diff
                if count == k and acc >= best_d[k - 1]:
                    continue
                # insert after any equal distances: keeps lower-index-first order
                pos = count if count < k else k - 1
                while pos > 0 and best_d[pos - 1] > acc:
                    pos -= 1
                s = (count if count < k else k - 1)
                while s > pos:
                    best_d[s] = best_d[s - 1]
                    best_i[s] = best_i[s - 1]
                    s -= 1
                best_d[pos] = acc
                best_i[pos] = j
                if count < k:
                    count += 1
            for j in range(k):
                out_v[i, j] = best_i[j]
    return out


def match_one_way_indices(base, cand, thresholds, inv_scale, circular):
    """Greedy hierarchical matching; see the fallback docstring."""
    cdef double[:, ::1] ba = np.ascontiguousarray(base, dtype=np.float64)
    cdef double[:, ::1] ca = np.ascontiguousarray(cand, dtype=np.float64)
    cdef double[::1] thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef double[::1] inv = np.ascontiguousarray(inv_scale, dtype=np.float64)
    cdef unsigned char[::1] circ = np.ascontiguousarray(circular, dtype=np.uint8)
    cdef Py_ssize_t nb = ba.shape[0], nc = ca.shape[0], p = ba.shape[1]
    out = np.full(nb, -1, dtype=np.int64)
    cdef long long[::1] out_v = out
    consumed_arr = np.zeros(nc, dtype=np.uint8)
    cdef unsigned char[::1] consumed = consumed_arr
    cdef Py_ssize_t i, j, l, best
    cdef double diff, term, acc, best_acc
    cdef bint ok

    with nogil:
        for j in range(nb):
            best = -1
            best_acc = 0.0
            for i in range(nc):
                if consumed[i]:
                    continue
                ok = True
                acc = 0.0
                for l in range(p):
                    diff = fabs(ca[i, l] - ba[j, l])
                    if circ[l] and 360.0 - diff < diff:
                        diff = 360.0 - diff
                    if thr[l] == 0.0:
                        if diff != 0.0:
                            ok = False
                            break
                    elif diff >= thr[l]:
                        ok = False
                        break
                    term = diff * inv[l]
                    acc += term * term
                if ok and (best < 0 or acc < best_acc):
                    best = i
                    best_acc = acc
            if best >= 0:
                out_v[j] = best
                consumed[best] = 1
    return out
