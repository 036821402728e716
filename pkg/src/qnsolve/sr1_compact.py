"""Compact forward and inverse representations of limited-memory SR1 matrices.

    B_{k+1} = gamma I + Psi^ M^ Psi^'   Psi^ = Y - gamma S,   M^ = (D + L + L' - gamma S'S)^-1
    H_{k+1} = I/gamma + Psi~ Mt Psi~'   Psi~ = S - Y/gamma,   Mt = (D + R + R' - Y'Y/gamma)^-1

SR1 matrices may be indefinite or singular, so both middle matrices go through
a pivoted symmetric-indefinite factorization with a pivot-size check.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from qnsolve import kernels
from qnsolve.errors import SingularMatrixError
from qnsolve.qnstore import ldr_views

PIVOT_TOL = 1e-12


def symmetric_inverse(A, tol=PIVOT_TOL):
    """Invert a small symmetric matrix through a Bunch-Kaufman factorization.

    Raises :class:`SingularMatrixError` when a 1x1 or 2x2 pivot block has an
    eigenvalue below ``tol * max|A|``.
    """
    A = np.asarray(A, dtype=np.float64)
    scale = np.abs(A).max() if A.size else 0.0
    if scale == 0.0:
        raise SingularMatrixError("middle matrix is zero")
    _, d, _ = scipy.linalg.ldl(A, lower=True)
    if np.min(np.abs(np.linalg.eigvalsh(d))) < tol * scale:
        raise SingularMatrixError("middle matrix is numerically singular")
    inv = scipy.linalg.solve(A, np.eye(A.shape[0]), assume_a="sym")
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True)
class Sr1Inverse:
    Mt: np.ndarray
    psi_rows: np.ndarray = field(repr=False)
    gamma: float
    buffer: object = field(repr=False, compare=False)
    version: int = field(repr=False, compare=False)

    @property
    def n(self):
        return self.psi_rows.shape[1]

    @property
    def k(self):
        return self.psi_rows.shape[0] - 1

    def solve(self, z):
        """``H_{k+1} z`` with k+1 length-n inner products."""
        self.buffer.check_fresh(self.version)
        z = np.ascontiguousarray(z, dtype=np.float64)
        if z.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}")
        w = self.Mt @ kernels.project(self.psi_rows, z)
        r = z / self.gamma
        kernels.accumulate(r, self.psi_rows, w)
        return r

    def psi(self):
        return self.psi_rows.T

    def dense(self):
        P = self.psi_rows.T
        return np.eye(self.n) / self.gamma + P @ self.Mt @ P.T


@dataclass(frozen=True)
class Sr1Forward:
    M: np.ndarray
    psi_rows: np.ndarray = field(repr=False)
    gamma: float
    buffer: object = field(repr=False, compare=False)
    version: int = field(repr=False, compare=False)

    @property
    def n(self):
        return self.psi_rows.shape[1]

    def matvec(self, v):
        self.buffer.check_fresh(self.version)
        v = np.ascontiguousarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}")
        w = self.M @ kernels.project(self.psi_rows, v)
        out = self.gamma * v
        kernels.accumulate(out, self.psi_rows, w)
        return out

    def dense(self):
        P = self.psi_rows.T
        return self.gamma * np.eye(self.n) + P @ self.M @ P.T


def build_sr1(buf):
    """Form ``Psi~ = S - Y/gamma`` explicitly and invert the middle matrix.

    Raises
    ------
    SingularMatrixError
        When ``D + R + R' - Y'Y/gamma`` is numerically singular, which
        includes any pair with ``y = B0 s``.
    """
    if len(buf) == 0:
        raise ValueError("pair buffer is empty")
    g = buf.gram
    _, D, R = ldr_views(g)
    Mt = symmetric_inverse(D + R + R.T - g.YtY / buf.gamma)
    psi = buf.s_rows - buf.y_rows / buf.gamma
    return Sr1Inverse(Mt=Mt, psi_rows=psi, gamma=buf.gamma,
                      buffer=buf, version=buf.version)


def build_sr1_forward(buf):
    if len(buf) == 0:
        raise ValueError("pair buffer is empty")
    g = buf.gram
    L, D, _ = ldr_views(g)
    M = symmetric_inverse(D + L + L.T - buf.gamma * g.StS)
    psi = buf.y_rows - buf.gamma * buf.s_rows
    return Sr1Forward(M=M, psi_rows=psi, gamma=buf.gamma,
                      buffer=buf, version=buf.version)


def solve_sr1(state, z):
    return state.solve(z)


def multiply_sr1_forward(buf, v, state=None):
    """``B_{k+1} v`` for the SR1 matrix of ``buf``.

    Pass a prebuilt ``state`` from :func:`build_sr1_forward` to avoid
    refactorizing the middle matrix on every call.
    """
    if state is None:
        state = build_sr1_forward(buf)
    return state.matvec(v)
