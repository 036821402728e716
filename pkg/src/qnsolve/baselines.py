"""Reference solvers the compact representations are compared against.

* :func:`two_loop_solve` - the classic L-BFGS two-loop recursion.
* :func:`unroll_forward` + :func:`smw_solve` - write ``B_{k+1}`` as ``B0``
  plus 3(k+1) rank-one terms and apply Sherman-Morrison-Woodbury term by term.
* :func:`unroll_inverse` + :func:`recursive_H_solve` - write ``H_{k+1}`` as
  ``H0`` plus 3(k+1) rank-one terms and apply them directly.
* :func:`sr1_self_dual_solve` - SR1 solve through the dual SR1 recursion on H.

Slot layout of an unrolled update for pair j (forward / inverse):

    3j   : y_j        1/(s'y)        |  s_j          1/(s'y)
    3j+1 : w_j        phi * s'B_j s  |  v_j          Phi_j * y'H_j y
    3j+2 : B_j s_j   -1/(s'B_j s)    |  H_j y_j     -1/(y'H_j y)

with ``w_j = y/(s'y) - B_j s/(s'B_j s)`` and ``v_j = s/(s'y) - H_j y/(y'H_j y)``.
"""
from dataclasses import dataclass, field

import numpy as np

from qnsolve import kernels
from qnsolve.broyden_compact import _check_phi, broyden_ratio
from qnsolve.errors import BreakdownError, DegenerateUpdateError

BREAKDOWN_TOL = 1e-14


@dataclass
class UnrolledUpdate:
    """``base * I + sum_i alphas[i] * us[i] us[i]'``.

    ``base`` is gamma for a forward unrolling and 1/gamma for an inverse one.
    ``taus``/``ps`` are filled by :func:`smw_factor`.
    """

    alphas: np.ndarray
    us: np.ndarray = field(repr=False)
    base: float
    inverse: bool
    taus: np.ndarray | None = None
    ps: np.ndarray | None = field(default=None, repr=False)
    smw_denominators: np.ndarray | None = None

    def __len__(self):
        return len(self.alphas)

    def dense(self):
        n = self.us.shape[1]
        return self.base * np.eye(n) + (self.us.T * self.alphas) @ self.us


def two_loop_solve(buf, z, phi=0.0):
    """``H_{k+1} z`` for the L-BFGS matrix of ``buf`` (two-loop recursion).

    Uses 2(k+1) length-n inner products; ``s_i'y_i`` comes from the Gram cache.
    """
    if phi != 0.0:
        raise ValueError("the two-loop recursion applies to BFGS (phi = 0) only")
    z = np.array(z, dtype=np.float64)
    if z.shape != (buf.n,):
        raise ValueError(f"expected a vector of length {buf.n}")
    npairs = len(buf)
    if npairs == 0:
        return z / buf.gamma
    S, Y = buf.s_rows, buf.y_rows
    rho = 1.0 / np.diag(buf.gram.StY)
    a = np.empty(npairs)
    q = z
    for i in range(npairs - 1, -1, -1):
        a[i] = rho[i] * kernels.dot(S[i], q)
        kernels.axpy(-a[i], Y[i], q)
    r = q / buf.gamma
    for i in range(npairs):
        b = rho[i] * kernels.dot(Y[i], r)
        kernels.axpy(a[i] - b, S[i], r)
    return r


def _unroll(buf, phi, inverse):
    phi = _check_phi(phi)
    npairs = len(buf)
    n = buf.n
    gamma = buf.gamma
    S, Y = buf.s_rows, buf.y_rows
    sty = np.diag(buf.gram.StY)

    a = np.empty(3 * npairs)
    U = np.empty((3 * npairs, n))
    ah = np.empty(3 * npairs) if inverse else None
    Uh = np.empty((3 * npairs, n)) if inverse else None

    for j in range(npairs):
        sj, yj = S[j], Y[j]
        if not sty[j] > 0.0:
            raise DegenerateUpdateError(f"s_{j}'y_{j} = {sty[j]} is not positive")
        a[3 * j] = 1.0 / sty[j]
        U[3 * j] = yj

        # B_j s_j as a running sum over the earlier slots
        bs = gamma * sj
        if j:
            coef = a[: 3 * j] * kernels.project(U[: 3 * j], sj)
            kernels.accumulate(bs, U[: 3 * j], coef)
        sBs = kernels.dot(sj, bs)
        if not sBs > BREAKDOWN_TOL * gamma * buf.gram.StS[j, j]:
            raise DegenerateUpdateError(f"s_{j}'B_{j} s_{j} = {sBs} is not positive")
        U[3 * j + 2] = bs
        a[3 * j + 2] = -1.0 / sBs
        U[3 * j + 1] = a[3 * j] * yj + a[3 * j + 2] * bs
        a[3 * j + 1] = -phi / a[3 * j + 2]

        if not inverse:
            continue
        ah[3 * j] = 1.0 / sty[j]
        Uh[3 * j] = sj
        hy = yj / gamma
        if j:
            coef = ah[: 3 * j] * kernels.project(Uh[: 3 * j], yj)
            kernels.accumulate(hy, Uh[: 3 * j], coef)
        yHy = kernels.dot(yj, hy)
        if not yHy > BREAKDOWN_TOL * buf.gram.YtY[j, j] / gamma:
            raise DegenerateUpdateError(f"y_{j}'H_{j} y_{j} = {yHy} is not positive")
        Uh[3 * j + 2] = hy
        ah[3 * j + 2] = -1.0 / yHy
        Uh[3 * j + 1] = ah[3 * j] * sj + ah[3 * j + 2] * hy
        Phi = broyden_ratio(phi, sty[j], yHy, sBs)
        ah[3 * j + 1] = -Phi / ah[3 * j + 2]

    fwd = UnrolledUpdate(alphas=a, us=U, base=gamma, inverse=False)
    if not inverse:
        return fwd, None
    return fwd, UnrolledUpdate(alphas=ah, us=Uh, base=1.0 / gamma, inverse=True)


def unroll_forward(buf, phi):
    """Rank-one unrolling of ``B_{k+1}``; ``B_j s_j`` is never formed from ``B_j``.

    Performs (k+1)(3k+2)/2 length-n inner products.
    """
    return _unroll(buf, phi, inverse=False)[0]


def unroll_inverse(buf, phi, with_forward=False):
    """Rank-one unrolling of ``H_{k+1}``.

    Each ``Phi_j`` needs ``s_j'B_j s_j``, so the forward unrolling is computed
    in the same pass; ``with_forward=True`` returns it too.
    """
    fwd, inv = _unroll(buf, phi, inverse=True)
    return (inv, fwd) if with_forward else inv


def smw_factor(unrolled):
    """Compute ``p_i = C_i^{-1} u_i`` and ``tau_i`` for the SMW recursion.

    ``C_0 = base * I`` and ``C_{i+1} = C_i + alpha_i u_i u_i'``. Fills
    ``unrolled.taus``, ``unrolled.ps`` and the denominators
    ``1 + alpha_i p_i'u_i``.
    """
    if unrolled.inverse:
        raise ValueError("SMW applies to a forward unrolling")
    nslots = len(unrolled)
    U = unrolled.us
    P = np.empty_like(U)
    taus = np.empty(nslots)
    dens = np.empty(nslots)
    for j in range(nslots):
        u = U[j]
        p = u / unrolled.base
        if j:
            coef = -taus[:j] * kernels.project(P[:j], u)
            kernels.accumulate(p, P[:j], coef)
        alpha = unrolled.alphas[j]
        pu = kernels.dot(p, u)
        den = 1.0 + alpha * pu
        if abs(den) < BREAKDOWN_TOL * (1.0 + abs(alpha * pu)):
            raise BreakdownError(f"SMW denominator vanished at slot {j}")
        P[j] = p
        taus[j] = alpha / den
        dens[j] = den
    unrolled.ps = P
    unrolled.taus = taus
    unrolled.smw_denominators = dens
    return unrolled


def smw_solve(unrolled, z):
    """``C_{3(k+1)}^{-1} z = z/base - sum_j tau_j (p_j'z) p_j``."""
    if unrolled.ps is None:
        smw_factor(unrolled)
    z = np.ascontiguousarray(z, dtype=np.float64)
    r = z / unrolled.base
    if len(unrolled):
        coef = -unrolled.taus * kernels.project(unrolled.ps, z)
        kernels.accumulate(r, unrolled.ps, coef)
    return r


def recursive_H_solve(unrolled, z):
    """``H0 z + sum_i alpha_i (u_i'z) u_i`` over an inverse unrolling."""
    if not unrolled.inverse:
        raise ValueError("recursive_H_solve needs an inverse unrolling")
    z = np.ascontiguousarray(z, dtype=np.float64)
    r = z * unrolled.base
    if len(unrolled):
        coef = unrolled.alphas * kernels.project(unrolled.us, z)
        kernels.accumulate(r, unrolled.us, coef)
    return r


def sr1_self_dual_solve(buf, z):
    """``H_{k+1} z`` for the SR1 matrix of ``buf`` via the dual recursion.

    ``p_i = s_i - H_i y_i`` is built from the earlier ``p_j``; then
    ``r = H0 z + sum_i (p_i'z)/(p_i'y_i) p_i``.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    if z.shape != (buf.n,):
        raise ValueError(f"expected a vector of length {buf.n}")
    npairs = len(buf)
    ginv = 1.0 / buf.gamma
    if npairs == 0:
        return ginv * z
    S, Y = buf.s_rows, buf.y_rows
    g = buf.gram
    P = np.empty_like(S)
    pty = np.empty(npairs)
    for i in range(npairs):
        p = S[i] - ginv * Y[i]
        if i:
            coef = -kernels.project(P[:i], Y[i]) / pty[:i]
            kernels.accumulate(p, P[:i], coef)
        pty[i] = kernels.dot(p, Y[i])
        scale = abs(g.StY[i, i]) + ginv * g.YtY[i, i]
        if abs(pty[i]) < BREAKDOWN_TOL * scale:
            raise BreakdownError(f"SR1 denominator p_{i}'y_{i} vanished")
        P[i] = p
    r = ginv * z
    kernels.accumulate(r, P, kernels.project(P, z) / pty)
    return r
