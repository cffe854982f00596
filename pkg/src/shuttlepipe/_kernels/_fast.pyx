# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the sliding-window kernels in ``_pure``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline void _isort(double* buf, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(1, n):
        v = buf[i]
        j = i - 1
        while j >= 0 and buf[j] > v:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = v


cdef inline double _median(double* buf, Py_ssize_t n) noexcept nogil:
    _isort(buf, n)
    cdef Py_ssize_t mid = n // 2
    if n % 2:
        return buf[mid]
    return (buf[mid - 1] + buf[mid]) / 2.0


def jump_mask(xs, ys, present, Py_ssize_t window, double threshold):
    cdef cnp.float64_t[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef cnp.float64_t[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef cnp.uint8_t[::1] p = np.ascontiguousarray(present, dtype=np.uint8)
    cdef Py_ssize_t n = x.shape[0]
    if y.shape[0] != n or p.shape[0] != n:
        raise ValueError("xs, ys and present must have equal length")
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_arr
    cdef Py_ssize_t half = window // 2
    cdef double thr2 = threshold * threshold
    cdef Py_ssize_t i, j, lo, hi, k
    cdef double dx, dy
    cdef double* bx = <double*>malloc(window * sizeof(double))
    cdef double* by = <double*>malloc(window * sizeof(double))
    if bx == NULL or by == NULL:
        free(bx)
        free(by)
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                if not p[i]:
                    continue
                lo = i - half
                if lo < 0:
                    lo = 0
                hi = i + half + 1
                if hi > n:
                    hi = n
                k = 0
                for j in range(lo, hi):
                    if p[j]:
                        bx[k] = x[j]
                        by[k] = y[j]
                        k += 1
                if k - 1 < 2:
                    continue
                dx = x[i] - _median(bx, k)
                dy = y[i] - _median(by, k)
                if dx * dx + dy * dy > thr2:
                    out[i] = 1
    finally:
        free(bx)
        free(by)
    return out_arr.astype(bool)


def mode_filter(codes, Py_ssize_t window, Py_ssize_t n_codes=3):
    cdef cnp.int64_t[::1] c = np.ascontiguousarray(codes, dtype=np.int64)
    cdef Py_ssize_t n = c.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t half = window // 2
    cdef Py_ssize_t i, j, best, lo, hi
    cdef Py_ssize_t* counts = <Py_ssize_t*>malloc(n_codes * sizeof(Py_ssize_t))
    if counts == NULL:
        raise MemoryError()
    for j in range(n_codes):
        counts[j] = 0
    try:
        with nogil:
            # running histogram over the current window; indices past either
            # end read the nearest edge code
            hi = -half
            lo = -half
            for i in range(n):
                while hi <= i + half:
                    counts[c[min(max(hi, 0), n - 1)]] += 1
                    hi += 1
                while lo < i - half:
                    counts[c[min(max(lo, 0), n - 1)]] -= 1
                    lo += 1
                best = 0
                for j in range(1, n_codes):
                    if counts[j] > counts[best]:
                        best = j
                out[i] = best
    finally:
        free(counts)
    return out_arr
