# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled vector kernels.

All arrays must be C-contiguous float64. ``rows`` is a (p, n) stack of
length-n vectors, one per row.
"""
import numpy as np


cdef inline double _dot(const double[::1] a, const double[::1] b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef Py_ssize_t m = n - n % 4
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    for i in range(0, m, 4):
        s0 += a[i] * b[i]
        s1 += a[i + 1] * b[i + 1]
        s2 += a[i + 2] * b[i + 2]
        s3 += a[i + 3] * b[i + 3]
    for i in range(m, n):
        s0 += a[i] * b[i]
    return (s0 + s1) + (s2 + s3)


def dot(const double[::1] a, const double[::1] b):
    if a.shape[0] != b.shape[0]:
        raise ValueError("length mismatch")
    cdef double r
    with nogil:
        r = _dot(a, b, a.shape[0])
    return r


cdef Py_ssize_t BLOCK = 1024


def project(const double[:, ::1] rows, const double[::1] z):
    # blocked so each chunk of z is read from memory once for all rows
    cdef Py_ssize_t p = rows.shape[0], n = rows.shape[1], j, b, e
    if z.shape[0] != n:
        raise ValueError("length mismatch")
    out = np.zeros(p, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for b in range(0, n, BLOCK):
            e = min(b + BLOCK, n)
            for j in range(p):
                o[j] += _dot(rows[j, b:e], z[b:e], e - b)
    return out


def accumulate(double[::1] out, const double[:, ::1] rows, const double[::1] coef):
    cdef Py_ssize_t p = rows.shape[0], n = rows.shape[1], i, j, b, e
    cdef double c
    if out.shape[0] != n or coef.shape[0] != p:
        raise ValueError("shape mismatch")
    with nogil:
        for b in range(0, n, BLOCK):
            e = min(b + BLOCK, n)
            for j in range(p):
                c = coef[j]
                if c == 0.0:
                    continue
                for i in range(b, e):
                    out[i] += c * rows[j, i]


def axpy(double alpha, const double[::1] x, double[::1] out):
    cdef Py_ssize_t n = x.shape[0], i
    if out.shape[0] != n:
        raise ValueError("length mismatch")
    with nogil:
        for i in range(n):
            out[i] += alpha * x[i]
