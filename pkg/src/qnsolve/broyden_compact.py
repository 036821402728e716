"""Compact inverse of limited-memory restricted-Broyden matrices.

For ``phi`` in [0, 1] and pairs ``(s_j, y_j)``, ``j = 0..k``, the inverse of
the quasi-Newton matrix is

    H_{k+1} = H0 + Psi~ Mt Psi~'     with  Psi~ = [S_k, H0 Y_k],

where the 2(k+1) x 2(k+1) middle matrix ``Mt`` is built by a bordered
recursion that only touches the Gram matrices of the pair buffer. The
forward matrix ``B_{k+1} = B0 + Psi M Psi'`` (``Psi = [B0 S_k, Y_k]``) is
built alongside, since its scalars ``s_j' B_j s_j`` feed the inverse
recursion.

Both middle matrices are stored with the S-block in the first k+1 rows and
the Y-block in the last k+1 rows. Growing from step j-1 to j inserts the new
S row at position j and the new Y row at the end; that index map plays the
role of the interleaving permutation and no permutation matrix is formed.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from qnsolve import kernels
from qnsolve.errors import DegenerateUpdateError, SingularMatrixError
from qnsolve.qnstore import ldr_views

DEGENERATE_TOL = 1e-14


def _check_phi(phi):
    phi = float(phi)
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"phi must lie in [0, 1], got {phi}")
    return phi


def lambda_scalar(phi, sBs, sTy):
    """``1 / (-(1 - phi)/sBs - phi/sTy)``, the diagonal entry of Lambda."""
    den = -(1.0 - phi) / sBs - phi / sTy
    if abs(den) < DEGENERATE_TOL * (1.0 / abs(sBs) + 1.0 / abs(sTy)):
        raise DegenerateUpdateError(f"lambda denominator vanished (phi={phi}, sBs={sBs}, sTy={sTy})")
    return 1.0 / den


def broyden_ratio(phi, sTy, yHy, sBs):
    """Weight ``Phi`` of the inverse-side update for a given ``phi``."""
    if phi == 0.0:
        return 1.0
    if phi == 1.0:
        return 0.0
    a = (1.0 - phi) * sTy * sTy
    b = phi * yHy * sBs
    den = a + b
    if abs(den) < DEGENERATE_TOL * (abs(a) + abs(b)):
        raise DegenerateUpdateError("Phi denominator vanished")
    return a / den


def _positive(value, name):
    if not value > 0.0:
        raise DegenerateUpdateError(f"{name} = {value} is not positive")
    return value


def _grow(prev, j, u, N, attach):
    """Border ``prev`` with one S row (index j) and one Y row (index 2j+1).

    The rank-two step being absorbed is ``[p_s, p_y] N [p_s, p_y]'`` where the
    column ``attach`` (0 for S, 1 for Y) equals the new raw vector plus
    ``Psi_{j-1} u``. ``prev`` is 2j x 2j in [S_0..S_{j-1}, Y_0..Y_{j-1}]
    order; the result is 2(j+1) x 2(j+1) in [S_0..S_j, Y_0..Y_j] order.
    """
    p = 2 * (j + 1)
    old = np.r_[0:j, j + 1 : 2 * j + 1]
    c_s, c_y = N[attach]
    out = np.empty((p, p))
    out[np.ix_(old, old)] = prev + N[attach, attach] * np.outer(u, u)
    out[old, j] = out[j, old] = c_s * u
    out[old, p - 1] = out[p - 1, old] = c_y * u
    out[j, j] = N[0, 0]
    out[j, p - 1] = out[p - 1, j] = N[0, 1]
    out[p - 1, p - 1] = N[1, 1]
    return out


@dataclass(frozen=True)
class CompactForward:
    """``B_{k+1} = gamma I + Psi M Psi'`` with ``Psi = [gamma S, Y]``."""

    M: np.ndarray
    sBs: np.ndarray
    lambdas: np.ndarray
    phi: float
    gamma: float
    s_rows: np.ndarray = field(repr=False)
    y_rows: np.ndarray = field(repr=False)
    buffer: object = field(repr=False, compare=False)
    version: int = field(repr=False, compare=False)

    @property
    def n(self):
        return self.s_rows.shape[1]

    def matvec(self, v):
        """Return ``B_{k+1} v``."""
        self.buffer.check_fresh(self.version)
        v = np.ascontiguousarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}")
        c = self.s_rows.shape[0]
        t = np.concatenate([self.gamma * kernels.project(self.s_rows, v),
                            kernels.project(self.y_rows, v)])
        w = self.M @ t
        out = self.gamma * v
        kernels.accumulate(out, self.s_rows, self.gamma * w[:c])
        kernels.accumulate(out, self.y_rows, np.ascontiguousarray(w[c:]))
        return out

    def dense(self):
        psi = np.hstack([self.gamma * self.s_rows.T, self.y_rows.T])
        return self.gamma * np.eye(self.n) + psi @ self.M @ psi.T


@dataclass(frozen=True)
class CompactInverse:
    """``H_{k+1} = I/gamma + Psi~ Mt Psi~'`` with ``Psi~ = [S, Y/gamma]``.

    Per-step scalars are kept for inspection: ``yHy[j] = y_j' H_j y_j``,
    ``Phi[j]`` and the bordering coefficients ``alpha``, ``beta``, ``delta``.
    """

    Mt: np.ndarray
    yHy: np.ndarray
    Phi: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    delta: np.ndarray
    phi: float
    gamma: float
    s_rows: np.ndarray = field(repr=False)
    y_rows: np.ndarray = field(repr=False)
    buffer: object = field(repr=False, compare=False)
    version: int = field(repr=False, compare=False)

    @property
    def n(self):
        return self.s_rows.shape[1]

    @property
    def k(self):
        return self.s_rows.shape[0] - 1

    def solve(self, z):
        """Return ``r = H_{k+1} z``, i.e. the solution of ``B_{k+1} r = z``.

        Uses 2(k+1) length-n inner products, one small matrix-vector product
        and one accumulation into the result.
        """
        self.buffer.check_fresh(self.version)
        z = np.ascontiguousarray(z, dtype=np.float64)
        if z.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}")
        c = self.s_rows.shape[0]
        ginv = 1.0 / self.gamma
        t = np.concatenate([kernels.project(self.s_rows, z),
                            ginv * kernels.project(self.y_rows, z)])
        w = self.Mt @ t
        r = ginv * z
        kernels.accumulate(r, self.s_rows, np.ascontiguousarray(w[:c]))
        kernels.accumulate(r, self.y_rows, ginv * w[c:])
        return r

    def psi(self):
        """Dense ``Psi~`` (n x 2(k+1)); for analysis, not for solves."""
        return np.hstack([self.s_rows.T, self.y_rows.T / self.gamma])

    def dense(self):
        psi = self.psi()
        return np.eye(self.n) / self.gamma + psi @ self.Mt @ psi.T


def build_states(buf, phi):
    """Build the forward and inverse compact states for the stored pairs.

    Only the Gram matrices of ``buf`` are read; no length-n work is done.

    Raises
    ------
    DegenerateUpdateError
        When ``s'y``, ``s'Bs``, ``y'Hy`` or a Lambda/Phi denominator vanishes.
    """
    phi = _check_phi(phi)
    if len(buf) == 0:
        raise ValueError("pair buffer is empty")
    g = buf.gram
    gamma = buf.gamma
    ginv = 1.0 / gamma
    StS, StY, YtY = g.StS, g.StY, g.YtY
    npairs = g.size

    sBs = np.empty(npairs)
    yHy = np.empty(npairs)
    lam = np.empty(npairs)
    Phi = np.empty(npairs)
    at = np.empty(npairs)
    bt = np.empty(npairs)
    dt = np.empty(npairs)

    # j = 0 seeds
    sy = _positive(StY[0, 0], "s_0'y_0")
    sBs[0] = _positive(gamma * StS[0, 0], "s_0'B_0 s_0")
    yHy[0] = _positive(ginv * YtY[0, 0], "y_0'H_0 y_0")
    lam[0] = lambda_scalar(phi, sBs[0], sy)
    M = -_inv_small(np.array([[sBs[0] - phi * lam[0], -phi * lam[0]],
                              [-phi * lam[0], -(sy + phi * lam[0])]]))
    Phi[0] = broyden_ratio(phi, sy, yHy[0], sBs[0])
    at[0], bt[0], dt[0] = _inverse_coefficients(Phi[0], sy, yHy[0])
    Mt = np.array([[at[0], bt[0]], [bt[0], dt[0]]])

    for j in range(1, npairs):
        sy = _positive(StY[j, j], f"s_{j}'y_{j}")

        # forward: s_j' B_j s_j from Psi_{j-1}' s_j = [gamma S' s_j ; Y' s_j]
        ps = np.concatenate([gamma * StS[:j, j], StY[j, :j]])
        u = M @ ps
        sBs[j] = _positive(gamma * StS[j, j] + ps @ u, f"s_{j}'B_{j} s_{j}")
        lam[j] = lambda_scalar(phi, sBs[j], sy)
        a = -(1.0 - phi) / sBs[j]
        b = -phi / sy
        d = (1.0 + phi * sBs[j] / sy) / sy
        M = _grow(M, j, u, np.array([[a, b], [b, d]]), attach=0)

        # inverse: y_j' H_j y_j from Psi~_{j-1}' y_j = [S' y_j ; Y' y_j / gamma]
        py = np.concatenate([StY[:j, j], ginv * YtY[:j, j]])
        ut = Mt @ py
        yHy[j] = _positive(ginv * YtY[j, j] + py @ ut, f"y_{j}'H_{j} y_{j}")
        Phi[j] = broyden_ratio(phi, sy, yHy[j], sBs[j])
        at[j], bt[j], dt[j] = _inverse_coefficients(Phi[j], sy, yHy[j])
        Mt = _grow(Mt, j, ut, np.array([[at[j], bt[j]], [bt[j], dt[j]]]), attach=1)

    fwd = CompactForward(M=M, sBs=sBs, lambdas=lam, phi=phi, gamma=gamma,
                         s_rows=buf.s_rows, y_rows=buf.y_rows,
                         buffer=buf, version=buf.version)
    inv = CompactInverse(Mt=Mt, yHy=yHy, Phi=Phi, alpha=at, beta=bt, delta=dt,
                         phi=phi, gamma=gamma, s_rows=buf.s_rows, y_rows=buf.y_rows,
                         buffer=buf, version=buf.version)
    return fwd, inv


def _inverse_coefficients(Phi, sy, yHy):
    a = (1.0 + Phi * yHy / sy) / sy
    b = -Phi / sy
    d = -(1.0 - Phi) / yHy
    return a, b, d


def _inv_small(A):
    return scipy.linalg.solve(A, np.eye(A.shape[0]), assume_a="sym")


def solve(state, z):
    """Solve ``B_{k+1} r = z`` with a built :class:`CompactInverse`."""
    return state.solve(z)


def multiply_forward(state, v):
    """``B_{k+1} v`` with a built :class:`CompactForward`."""
    return state.matvec(v)


def direct_block(cache, lambdas, phi, gamma):
    """The block matrix whose inverse is ``Mt``, assembled from its definition."""
    L, D, R = ldr_views(cache)
    pl = phi * np.diag(lambdas)
    yhy = cache.YtY / gamma
    return np.block([[-pl, -R - D - pl],
                     [-R.T - D - pl, -D - pl - yhy]])


def assemble_Mtilde_direct(cache, lambdas, phi, gamma):
    """Invert :func:`direct_block` with a symmetric-indefinite factorization.

    Used as an oracle for the recursive build.

    Raises
    ------
    SingularMatrixError
        When the Bunch-Kaufman factorization breaks down.
    """
    A = direct_block(cache, lambdas, phi, gamma)
    lu, d, perm = scipy.linalg.ldl(A, lower=True)
    scale = np.abs(A).max()
    ev = np.linalg.eigvalsh(d)
    if np.min(np.abs(ev)) <= 1e-14 * scale:
        raise SingularMatrixError("Mt block is numerically singular")
    return scipy.linalg.solve(A, np.eye(A.shape[0]), assume_a="sym")
