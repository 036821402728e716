"""Dense reference matrices for small problems.

Everything here forms n x n matrices explicitly and is meant for tests and
cross-checks only. ``B`` and ``H`` are accumulated by separate recursions so
that ``B @ H == I`` checks both.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from qnsolve.broyden_compact import DEGENERATE_TOL, _check_phi
from qnsolve.errors import DegenerateUpdateError
from qnsolve.qnstore import PairBuffer, ldr_views

MAX_DENSE_N = 1000


@dataclass
class DenseMatrixPair:
    B: np.ndarray
    H: np.ndarray


def _sym(A):
    return 0.5 * (A + A.T)


def _pairs(buf):
    if buf.n > MAX_DENSE_N:
        raise ValueError(f"dense oracle limited to n <= {MAX_DENSE_N}")
    return list(zip(buf.s_rows, buf.y_rows))


def _nonzero(value, scale, what):
    if abs(value) <= DEGENERATE_TOL * scale:
        raise DegenerateUpdateError(f"{what} vanished")
    return value


def inverse_weight(phi, s, y, B, H):
    """Inverse-side weight of the Broyden update, straight from its definition."""
    sy = s @ y
    num = (1.0 - phi) * sy * sy
    return num / (num + phi * (y @ H @ y) * (s @ B @ s))


def broyden_step(B, s, y, phi):
    """One forward Broyden-class update of ``B``."""
    Bs = B @ s
    sBs = _nonzero(s @ Bs, abs(s @ s) * np.abs(B).max(), "s'Bs")
    sy = _nonzero(s @ y, np.linalg.norm(s) * np.linalg.norm(y), "s'y")
    w = y / sy - Bs / sBs
    return _sym(B - np.outer(Bs, Bs) / sBs + np.outer(y, y) / sy + phi * sBs * np.outer(w, w))


def inverse_broyden_step(H, s, y, Phi):
    """One update of ``H = B^{-1}`` given the inverse-side weight ``Phi``."""
    Hy = H @ y
    yHy = _nonzero(y @ Hy, abs(y @ y) * np.abs(H).max(), "y'Hy")
    sy = _nonzero(s @ y, np.linalg.norm(s) * np.linalg.norm(y), "s'y")
    v = s / sy - Hy / yHy
    return _sym(H + np.outer(s, s) / sy - np.outer(Hy, Hy) / yHy + Phi * yHy * np.outer(v, v))


def dense_broyden(buf, phi):
    """Dense ``B_{k+1}`` and ``H_{k+1}`` for a restricted-Broyden update."""
    phi = _check_phi(phi)
    n = buf.n
    B = buf.gamma * np.eye(n)
    H = np.eye(n) / buf.gamma
    for s, y in _pairs(buf):
        Phi = inverse_weight(phi, s, y, B, H)
        B, H = broyden_step(B, s, y, phi), inverse_broyden_step(H, s, y, Phi)
    return DenseMatrixPair(B, H)


def dense_bfgs(buf):
    """BFGS via its textbook form, independent of the Broyden-class code."""
    n = buf.n
    B = buf.gamma * np.eye(n)
    H = np.eye(n) / buf.gamma
    I = np.eye(n)
    for s, y in _pairs(buf):
        Bs = B @ s
        B = _sym(B - np.outer(Bs, Bs) / (s @ Bs) + np.outer(y, y) / (y @ s))
        rho = 1.0 / (y @ s)
        V = I - rho * np.outer(y, s)
        H = _sym(V.T @ H @ V + rho * np.outer(s, s))
    return DenseMatrixPair(B, H)


def sr1_step(B, s, y):
    r = y - B @ s
    den = _nonzero(s @ r, np.linalg.norm(s) * np.linalg.norm(r), "SR1 denominator")
    return _sym(B + np.outer(r, r) / den)


def dense_sr1(buf):
    """Dense SR1 ``B_{k+1}``; ``H_{k+1}`` from the dual recursion (s and y swapped)."""
    n = buf.n
    B = buf.gamma * np.eye(n)
    H = np.eye(n) / buf.gamma
    for s, y in _pairs(buf):
        B = sr1_step(B, s, y)
        H = sr1_step(H, y, s)
    return DenseMatrixPair(B, H)


def dense_solve(B, z):
    """Solve ``B r = z`` by a dense LU factorization."""
    return scipy.linalg.solve(B, z)


def compact_intermediates(buf, phi):
    """``s_j' B_j s_j`` and ``y_j' H_j y_j`` from the dense recursions."""
    phi = _check_phi(phi)
    n = buf.n
    B = buf.gamma * np.eye(n)
    H = np.eye(n) / buf.gamma
    sBs, yHy = [], []
    for s, y in _pairs(buf):
        sBs.append(s @ B @ s)
        yHy.append(y @ H @ y)
        Phi = inverse_weight(phi, s, y, B, H)
        B, H = broyden_step(B, s, y, phi), inverse_broyden_step(H, s, y, Phi)
    return np.array(sBs), np.array(yHy)


# -- closed forms relating the updates ------------------------------------


def bfgs_inverse_closed_form(buf):
    """``H = H0 + [S, H0 Y] W [S, H0 Y]'`` with the explicit BFGS middle matrix.

    ``W = [[Rb^-T (D + Y'H0Y) Rb^-1, -Rb^-T], [-Rb^-1, 0]]``, ``Rb = R + D``.
    """
    g = buf.gram
    _, D, R = ldr_views(g)
    Rb = R + D
    Rinv = scipy.linalg.solve_triangular(Rb, np.eye(len(Rb)), lower=False)
    yhy = g.YtY / buf.gamma
    W = np.block([[Rinv.T @ (D + yhy) @ Rinv, -Rinv.T],
                  [-Rinv, np.zeros_like(Rinv)]])
    Psi = np.hstack([buf.S, buf.Y / buf.gamma])
    return np.eye(buf.n) / buf.gamma + Psi @ W @ Psi.T


def dfp_inverse_closed_form(buf):
    """``H = H0 + [S, H0 Y] [[D, -R], [-R', -Y'H0Y]]^-1 [S, H0 Y]'``."""
    g = buf.gram
    _, D, R = ldr_views(g)
    W = np.linalg.inv(np.block([[D, -R], [-R.T, -g.YtY / buf.gamma]]))
    Psi = np.hstack([buf.S, buf.Y / buf.gamma])
    return np.eye(buf.n) / buf.gamma + Psi @ W @ Psi.T


def bfgs_forward_closed_form(buf):
    """``B = B0 - [B0 S, Y] [[S'B0S, L], [L', -D]]^-1 [B0 S, Y]'``."""
    g = buf.gram
    L, D, _ = ldr_views(g)
    W = np.linalg.inv(np.block([[buf.gamma * g.StS, L], [L.T, -D]]))
    Psi = np.hstack([buf.gamma * buf.S, buf.Y])
    return buf.gamma * np.eye(buf.n) - Psi @ W @ Psi.T


def sr1_inverse_closed_form(buf):
    """``H0 + (S - H0 Y)(D + R + R' - Y'H0Y)^-1 (S - H0 Y)'``."""
    g = buf.gram
    _, D, R = ldr_views(g)
    P = buf.S - buf.Y / buf.gamma
    return np.eye(buf.n) / buf.gamma + P @ np.linalg.inv(D + R + R.T - g.YtY / buf.gamma) @ P.T


def sr1_forward_closed_form(buf):
    """``B0 + (Y - B0 S)(D + L + L' - S'B0S)^-1 (Y - B0 S)'``."""
    g = buf.gram
    L, D, _ = ldr_views(g)
    P = buf.Y - buf.gamma * buf.S
    return buf.gamma * np.eye(buf.n) + P @ np.linalg.inv(D + L + L.T - buf.gamma * g.StS) @ P.T


def swapped(buf):
    """A buffer with ``s <-> y`` and ``gamma <-> 1/gamma``."""
    out = PairBuffer(buf.n, m=max(len(buf), 1), gamma=1.0 / buf.gamma)
    for s, y in zip(buf.s_rows, buf.y_rows):
        out.push(y, s)
    return out


@dataclass
class DualityReport:
    deviations: dict = field(default_factory=dict)
    tol: float = 1e-11

    @property
    def passed(self):
        return all(v <= self.tol for v in self.deviations.values())

    def __str__(self):
        lines = [f"{name:32s} {dev:.3e} {'ok' if dev <= self.tol else 'FAIL'}"
                 for name, dev in self.deviations.items()]
        return "\n".join(lines)


def _maxdev(A, B):
    return float(np.max(np.abs(A - B)))


def check_duality(buf, tol=1e-11):
    """Check the closed-form and duality identities on a small instance.

    * BFGS inverse closed form equals the dense BFGS ``H``.
    * DFP inverse closed form equals the dense DFP ``H``.
    * The DFP inverse form evaluated on swapped data equals the dense BFGS
      ``B`` and the BFGS forward closed form.
    * The SR1 inverse form evaluated on swapped data equals the SR1 forward
      form and the dense SR1 ``B``.
    """
    rep = DualityReport(tol=tol)
    bfgs = dense_broyden(buf, 0.0)
    dfp = dense_broyden(buf, 1.0)
    sw = swapped(buf)
    rep.deviations["bfgs_inverse_vs_dense"] = _maxdev(bfgs_inverse_closed_form(buf), bfgs.H)
    rep.deviations["dfp_inverse_vs_dense"] = _maxdev(dfp_inverse_closed_form(buf), dfp.H)
    swapped_dfp = dfp_inverse_closed_form(sw)
    rep.deviations["swapped_dfp_vs_bfgs_forward"] = _maxdev(swapped_dfp, bfgs_forward_closed_form(buf))
    rep.deviations["swapped_dfp_vs_dense_bfgs"] = _maxdev(swapped_dfp, bfgs.B)
    try:
        sr1 = dense_sr1(buf)
        swapped_sr1 = sr1_inverse_closed_form(sw)
        rep.deviations["swapped_sr1_vs_sr1_forward"] = _maxdev(swapped_sr1, sr1_forward_closed_form(buf))
        rep.deviations["swapped_sr1_vs_dense_sr1"] = _maxdev(swapped_sr1, sr1.B)
    except (DegenerateUpdateError, np.linalg.LinAlgError):
        rep.deviations["sr1_defined"] = np.inf
    return rep
