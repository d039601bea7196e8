# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Grunwald-Letnikov history convolution."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def gl_recurrence(const double complex[:, ::1] lead, const double[::1] coeffs,
                  const double complex[:, ::1] x0, Py_ssize_t kmax):
    """X[k+1] = lead @ X[k] - sum_{i=2}^{k+1} coeffs[i] X[k+1-i]."""
    cdef Py_ssize_t n = lead.shape[0]
    cdef Py_ssize_t w = x0.shape[1]
    cdef Py_ssize_t m = 2 * n * w
    cdef Py_ssize_t k, i, r, c, j, e
    cdef double complex acc
    cdef double ci
    cdef double *dst
    cdef const double *src
    if coeffs.shape[0] < kmax + 1:
        raise ValueError("need at least kmax+1 coefficients")
    out_arr = np.empty((kmax + 1, n, w), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    # coefficients are real, so the history sum runs on the interleaved
    # real/imaginary parts of each contiguous slice
    cdef double[:, ::1] flat = out_arr.view(np.float64).reshape(kmax + 1, m)
    out[0, :, :] = x0
    with nogil:
        for k in range(kmax):
            for r in range(n):
                for c in range(w):
                    acc = 0
                    for j in range(n):
                        acc = acc + lead[r, j] * out[k, j, c]
                    out[k + 1, r, c] = acc
            dst = &flat[k + 1, 0]
            for i in range(2, k + 2):
                ci = coeffs[i]
                src = &flat[k + 1 - i, 0]
                for e in range(m):
                    dst[e] -= ci * src[e]
    return out_arr
