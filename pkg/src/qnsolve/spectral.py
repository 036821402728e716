"""Eigenvalues and condition numbers of compact quasi-Newton inverses.

With ``B0 = gamma I`` the inverse is ``H = I/gamma + Psi~ Mt Psi~'``. A thin
QR factorization ``Psi~ = Q1 R1`` reduces the spectrum to that of the small
matrix ``R1 Mt R1'``: its eigenvalues ``d_i`` shift ``1/gamma``, and every
direction orthogonal to range(Q1) keeps the eigenvalue ``1/gamma``.
"""
from dataclasses import dataclass, field

import numpy as np

from qnsolve.broyden_compact import CompactInverse
from qnsolve.sr1_compact import Sr1Inverse

SYMMETRY_TOL = 1e-10
NEAR_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class ThinQrFactors:
    Q1: np.ndarray = field(repr=False)
    R1: np.ndarray


def thin_qr(Psi):
    """Householder thin QR of an n x p matrix with n >= p.

    Rank deficiency is allowed and shows up as (near) zero diagonal entries
    of ``R1``.
    """
    Psi = np.asarray(Psi, dtype=np.float64)
    n, p = Psi.shape
    if n < p:
        raise ValueError(f"thin QR needs n >= p, got {n} x {p}")
    Q1, R1 = np.linalg.qr(Psi, mode="reduced")
    return ThinQrFactors(Q1=Q1, R1=R1)


def _offdiag_norm(A):
    return np.linalg.norm(A - np.diag(np.diag(A)))


def eigen_small(A, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns ``(w, V)`` with ``w`` ascending and ``A = V diag(w) V'``.
    """
    A = np.array(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("eigen_small needs a square matrix")
    scale = np.abs(A).max() if A.size else 0.0
    if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_TOL * max(scale, 1.0):
        raise ValueError("eigen_small needs a symmetric matrix")
    A = 0.5 * (A + A.T)
    p = A.shape[0]
    V = np.eye(p)
    tol = np.finfo(np.float64).eps * np.linalg.norm(A)
    for _ in range(max_sweeps):
        if _offdiag_norm(A) <= tol:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = A[i, j]
                if abs(aij) <= tol / p:
                    A[i, j] = A[j, i] = 0.0
                    continue
                theta = (A[j, j] - A[i, i]) / (2.0 * aij)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(1.0, theta))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # A <- J' A J with J the (i, j) rotation
                ai, aj = A[:, i].copy(), A[:, j].copy()
                A[:, i] = c * ai - s * aj
                A[:, j] = s * ai + c * aj
                ai, aj = A[i, :].copy(), A[j, :].copy()
                A[i, :] = c * ai - s * aj
                A[j, :] = s * ai + c * aj
                A[i, j] = A[j, i] = 0.0
                vi, vj = V[:, i].copy(), V[:, j].copy()
                V[:, i] = c * vi - s * vj
                V[:, j] = s * vi + c * vj
    else:
        raise RuntimeError("Jacobi sweeps did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass(frozen=True)
class SpectrumReport:
    """Spectrum of ``H_{k+1}``: ``bulk_eigenvalue`` repeated ``bulk_multiplicity``
    times plus ``shifted_eigenvalues``."""

    bulk_eigenvalue: float
    bulk_multiplicity: int
    shifted_eigenvalues: np.ndarray
    cond_H: float
    cond_B: float
    near_singular: bool

    @property
    def n(self):
        return self.bulk_multiplicity + len(self.shifted_eigenvalues)

    def eigenvalues(self):
        """All n eigenvalues of ``H_{k+1}``, ascending."""
        bulk = np.full(self.bulk_multiplicity, self.bulk_eigenvalue)
        return np.sort(np.concatenate([bulk, self.shifted_eigenvalues]))

    def __str__(self):
        lines = [
            f"bulk eigenvalue      {self.bulk_eigenvalue:.6e} (x{self.bulk_multiplicity})",
            "shifted eigenvalues  " + " ".join(f"{v:.6e}" for v in self.shifted_eigenvalues),
            f"cond(H)              {self.cond_H:.6e}",
            f"cond(B)              {self.cond_B:.6e}",
        ]
        if self.near_singular:
            lines.append("warning: matrix is numerically singular")
        return "\n".join(lines)


def spectrum(state):
    """Spectrum of the inverse held by a built Broyden-class or SR1 state."""
    if not isinstance(state, (CompactInverse, Sr1Inverse)):
        raise TypeError(f"unsupported state type {type(state).__name__}")
    state.buffer.check_fresh(state.version)
    Psi = state.psi()
    n, p = Psi.shape
    if n < p:
        raise ValueError(f"spectrum needs n >= {p}")
    R1 = thin_qr(Psi).R1
    small = R1 @ state.Mt @ R1.T
    d, _ = eigen_small(0.5 * (small + small.T))
    bulk = 1.0 / state.gamma
    shifted = bulk + d
    mags = np.abs(np.concatenate([[bulk] if n > p else [], shifted]))
    lo, hi = mags.min(), mags.max()
    near_singular = bool(lo < NEAR_SINGULAR_TOL * hi)
    cond = np.inf if lo == 0.0 else float(hi / lo)
    return SpectrumReport(bulk_eigenvalue=bulk, bulk_multiplicity=n - p,
                          shifted_eigenvalues=shifted, cond_H=cond, cond_B=cond,
                          near_singular=near_singular)
