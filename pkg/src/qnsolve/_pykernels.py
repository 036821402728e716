"""Pure numpy implementation of the vector kernels.

Mirrors ``_ckernels.pyx`` call for call; selected when the compiled module is
missing or ``QNSOLVE_PURE_PYTHON`` is set.
"""
import numpy as np


def dot(a, b):
    return float(np.dot(a, b))


def project(rows, z):
    return rows @ z


def accumulate(out, rows, coef):
    out += coef @ rows


def axpy(alpha, x, out):
    out += alpha * x
