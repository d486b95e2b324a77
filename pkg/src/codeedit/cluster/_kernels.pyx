# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled k-means assignment and silhouette kernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def assign_labels(const double[:, ::1] X, const double[:, ::1] C):
    """Nearest centroid (lowest index on ties) and squared distance per point."""
    cdef Py_ssize_t n = X.shape[0], k = C.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double best, acc, diff
    cdef cnp.int64_t arg
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] lv = labels
    cdef double[::1] dv = dist
    with nogil:
        for i in range(n):
            best = -1.0
            arg = 0
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    diff = X[i, t] - C[j, t]
                    acc = acc + diff * diff
                if best < 0.0 or acc < best:
                    best = acc
                    arg = j
            lv[i] = arg
            dv[i] = best
    return labels, dist


def silhouette_samples(const double[:, ::1] X, const cnp.int64_t[::1] labels, Py_ssize_t k):
    """Per-point silhouette; singleton clusters and 0/0 both give 0."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t, c
    cdef double acc, diff, a, b, m
    counts = np.bincount(np.asarray(labels), minlength=k).astype(np.float64)
    cdef double[::1] cnt = counts
    sums_arr = np.zeros(k, dtype=np.float64)
    cdef double[::1] sums = sums_arr
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] s = out
    with nogil:
        for i in range(n):
            for c in range(k):
                sums[c] = 0.0
            for j in range(n):
                if j == i:
                    continue
                acc = 0.0
                for t in range(d):
                    diff = X[i, t] - X[j, t]
                    acc = acc + diff * diff
                sums[labels[j]] += sqrt(acc)
            c = labels[i]
            if cnt[c] <= 1.0:
                s[i] = 0.0
                continue
            a = sums[c] / (cnt[c] - 1.0)
            b = -1.0
            for j in range(k):
                if j == c or cnt[j] == 0.0:
                    continue
                m = sums[j] / cnt[j]
                if b < 0.0 or m < b:
                    b = m
            m = a if a > b else b
            s[i] = 0.0 if m == 0.0 else (b - a) / m
    return out
