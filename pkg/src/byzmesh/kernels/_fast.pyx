# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled aggregation kernels.

Hot inner loops of the simulator and the contraction Monte-Carlo: small
(S x D) float64 blocks aggregated millions of times.  Accumulation
order matches byzmesh.kernels.pure exactly (row-sequential sums,
sort-then-midpoint medians, lowest-index tie-breaking) so the two
backends are interchangeable.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def weighted_sum(double[::1] w, double[:, ::1] x):
    # Row-sequential accumulation, matching kernels.pure bit for bit.
    cdef Py_ssize_t s = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, k
    out_arr = np.zeros(d)
    cdef double[::1] out = out_arr
    for i in range(s):
        for k in range(d):
            out[k] += w[i] * x[i, k]
    return out_arr


cdef void _insertion_sort(double* buf, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(1, n):
        v = buf[i]
        j = i - 1
        while j >= 0 and buf[j] > v:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = v


def coomed(double[:, ::1] x):
    cdef Py_ssize_t s = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, k
    cdef Py_ssize_t lo = (s - 1) // 2, hi = s // 2
    out_arr = np.empty(d)
    cdef double[::1] out = out_arr
    col_arr = np.empty(s)
    cdef double[::1] col = col_arr
    for k in range(d):
        for i in range(s):
            col[i] = x[i, k]
        _insertion_sort(&col[0], s)
        out[k] = 0.5 * (col[lo] + col[hi])
    return out_arr


def trimean(double[:, ::1] x, Py_ssize_t q):
    cdef Py_ssize_t s = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, k
    cdef double acc
    out_arr = np.empty(d)
    cdef double[::1] out = out_arr
    col_arr = np.empty(s)
    cdef double[::1] col = col_arr
    for k in range(d):
        for i in range(s):
            col[i] = x[i, k]
        _insertion_sort(&col[0], s)
        acc = 0.0
        for i in range(q, s - q):
            acc += col[i]
        out[k] = acc / <double>(s - 2 * q)
    return out_arr


def ios_aggregate(double[::1] w, double[:, ::1] x, Py_ssize_t self_idx, Py_ssize_t q):
    cdef Py_ssize_t s = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, k, r, worst
    cdef double mass, dist, worst_dist, diff
    trusted_arr = np.ones(s, dtype=np.uint8)
    cdef unsigned char[::1] trusted = trusted_arr
    avg_arr = np.empty(d)
    cdef double[::1] avg = avg_arr
    for r in range(q):
        mass = 0.0
        for i in range(s):
            if trusted[i]:
                mass += w[i]
        for k in range(d):
            avg[k] = 0.0
        for i in range(s):
            if trusted[i]:
                for k in range(d):
                    avg[k] += w[i] * x[i, k]
        for k in range(d):
            avg[k] = avg[k] / mass
        worst = -1
        worst_dist = -1.0
        for i in range(s):
            if not trusted[i] or i == self_idx:
                continue
            dist = 0.0
            for k in range(d):
                diff = x[i, k] - avg[k]
                dist += diff * diff
            if dist > worst_dist:
                worst_dist = dist
                worst = i
        trusted[worst] = 0
    mass = 0.0
    for i in range(s):
        if trusted[i]:
            mass += w[i]
    out_arr = np.zeros(d)
    cdef double[::1] out = out_arr
    for i in range(s):
        if trusted[i]:
            for k in range(d):
                out[k] += w[i] * x[i, k]
    for k in range(d):
        out[k] = out[k] / mass
    return out_arr


def krum_select(double[:, ::1] x, Py_ssize_t q):
    cdef Py_ssize_t s = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t keep = s - q - 2
    cdef Py_ssize_t i, j, k, best
    cdef double diff, dist, score, best_score
    dists_arr = np.empty((s, s))
    cdef double[:, ::1] dists = dists_arr
    row_arr = np.empty(s - 1)
    cdef double[::1] row = row_arr
    for i in range(s):
        dists[i, i] = 0.0
        for j in range(i + 1, s):
            dist = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                dist += diff * diff
            dists[i, j] = dist
            dists[j, i] = dist
    best = -1
    best_score = np.inf
    for i in range(s):
        k = 0
        for j in range(s):
            if j != i:
                row[k] = dists[i, j]
                k += 1
        _insertion_sort(&row[0], s - 1)
        score = 0.0
        for j in range(keep):
            score += row[j]
        if score < best_score:
            best_score = score
            best = i
    return best
