# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the sparse reservoir update.

These mirror the pure-NumPy implementations in ``kernels.py`` exactly; the
accumulation order of the CSR mat-vec matches SciPy's so the two backends
agree to the last bit on typical inputs.
"""

from libc.math cimport tanh

import numpy as np


def csr_matvec(long[::1] indptr, long[::1] indices, double[::1] data,
               double[::1] x, double[::1] out):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(indptr[i], indptr[i + 1]):
            acc += data[j] * x[indices[j]]
        out[i] = acc


def leaky_advance(long[::1] indptr, long[::1] indices, double[::1] data,
                  double[::1] bias, double leak,
                  double[::1] r, double[::1] pre, double[::1] out):
    """out = (1 - leak) * r + leak * tanh(W_r r + pre + bias), one chunk."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = pre[i] + bias[i]
        for j in range(indptr[i], indptr[i + 1]):
            acc += data[j] * r[indices[j]]
        out[i] = (1.0 - leak) * r[i] + leak * tanh(acc)


def leaky_force(long[::1] indptr, long[::1] indices, double[::1] data,
                double[::1] bias, double leak,
                double[::1] r0, double[:, ::1] pre, double[:, ::1] out):
    """Teacher-forced state sequence for one chunk.

    out[t] = (1 - leak) * out[t-1] + leak * tanh(W_r out[t-1] + pre[t] + bias)
    with out[-1] taken as r0.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t T = pre.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double acc
    cdef double[::1] prev = r0
    for t in range(T):
        for i in range(n):
            acc = pre[t, i] + bias[i]
            for j in range(indptr[i], indptr[i + 1]):
                acc += data[j] * prev[indices[j]]
            out[t, i] = (1.0 - leak) * prev[i] + leak * tanh(acc)
        prev = out[t]
