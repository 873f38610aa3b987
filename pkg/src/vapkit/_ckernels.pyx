# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-frame kernels. See ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def window_counts(x, lo, hi):
    cdef const unsigned char[::1] xv = np.ascontiguousarray(x, dtype=np.uint8)
    cdef const long long[::1] lov = np.ascontiguousarray(lo, dtype=np.int64)
    cdef const long long[::1] hiv = np.ascontiguousarray(hi, dtype=np.int64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t k = lov.shape[0]
    cdef long long[::1] csum = np.zeros(n + 1, dtype=np.int64)
    out = np.empty((n, k), dtype=np.int32)
    cdef int[:, ::1] ov = out
    cdef Py_ssize_t t, j
    cdef long long a, b
    for t in range(n):
        csum[t + 1] = csum[t] + xv[t]
    for t in range(n):
        for j in range(k):
            a = t + lov[j]
            b = t + hiv[j]
            if a < 0:
                a = 0
            elif a > n:
                a = n
            if b < 0:
                b = 0
            elif b > n:
                b = n
            if b < a:
                b = a
            ov[t, j] = <int>(csum[b] - csum[a])
    return out


def run_lengths(mask):
    cdef const unsigned char[::1] mv = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t n = mv.shape[0]
    out = np.zeros(n, dtype=np.int32)
    cdef int[::1] ov = out
    cdef Py_ssize_t t
    cdef int run = 0
    for t in range(n):
        if mv[t]:
            run += 1
        else:
            run = 0
        ov[t] = run
    return out
