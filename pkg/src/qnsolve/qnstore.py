"""Limited-memory pair history with incrementally maintained Gram matrices.

The buffer stores the pairs row-wise: ``s_rows[i]`` is ``s_i``, so
``s_rows.T`` is the usual n x (k+1) matrix ``S_k``. Rows are kept in push
order (oldest first) and the oldest pair is evicted once ``m`` pairs are held.
"""
from dataclasses import dataclass

import numpy as np

from qnsolve import kernels
from qnsolve.errors import StaleStateError

CURVATURE_TOL = 1e-8


@dataclass
class GramCache:
    """``S'S``, ``S'Y`` and ``Y'Y`` for the stored pairs.

    The arrays are views into preallocated m x m storage and are only valid
    until the next push.
    """

    StS: np.ndarray
    StY: np.ndarray
    YtY: np.ndarray

    @property
    def size(self):
        return self.StY.shape[0]


def ldr_views(cache):
    """Split ``S'Y`` into strictly lower, diagonal and strictly upper parts.

    ``L + D + R`` reproduces ``S'Y`` bit for bit: every entry of ``S'Y`` lands
    in exactly one of the three and the others hold zero there.
    """
    sty = cache.StY
    if sty.size == 0:
        raise ValueError("empty Gram cache")
    return np.tril(sty, -1), np.diag(np.diag(sty)), np.triu(sty, 1)


class PairBuffer:
    """FIFO store of the most recent ``m`` quasi-Newton pairs.

    Parameters
    ----------
    n : int
        Problem dimension.
    m : int, optional
        Memory limit (number of pairs retained).
    gamma : float, optional
        Scale of the initial matrix ``B0 = gamma * I`` (so ``H0 = I / gamma``).
    """

    def __init__(self, n, m=6, gamma=1.0):
        if n < 1 or m < 1:
            raise ValueError("n and m must be positive")
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        self.n = int(n)
        self.m = int(m)
        self.gamma = float(gamma)
        self._s = np.zeros((m, n))
        self._y = np.zeros((m, n))
        self._sts = np.zeros((m, m))
        self._sty = np.zeros((m, m))
        self._yty = np.zeros((m, m))
        self._count = 0
        self.version = 0
        self.pushed = 0

    @classmethod
    def from_pairs(cls, pairs, gamma=1.0, m=None, require_curvature=False):
        pairs = list(pairs)
        if not pairs:
            raise ValueError("need at least one pair")
        n = len(pairs[0][0])
        buf = cls(n, m=m or len(pairs), gamma=gamma)
        for s, y in pairs:
            if not buf.push(s, y, require_curvature=require_curvature):
                raise ValueError("pair violates the curvature condition")
        return buf

    def __len__(self):
        return self._count

    @property
    def k(self):
        """Index of the newest pair, i.e. ``len(self) - 1``."""
        return self._count - 1

    @property
    def s_rows(self):
        return self._s[: self._count]

    @property
    def y_rows(self):
        return self._y[: self._count]

    @property
    def S(self):
        return self.s_rows.T

    @property
    def Y(self):
        return self.y_rows.T

    @property
    def gram(self):
        c = self._count
        return GramCache(self._sts[:c, :c], self._sty[:c, :c], self._yty[:c, :c])

    def push(self, s, y, require_curvature=False):
        """Append a pair, evicting the oldest when full.

        Returns ``False`` (leaving the buffer untouched) when
        ``require_curvature`` is set and ``s'y <= CURVATURE_TOL * |s| |y|``.
        """
        s = np.ascontiguousarray(s, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if s.shape != (self.n,) or y.shape != (self.n,):
            raise ValueError(f"expected vectors of length {self.n}")
        sy = kernels.dot(s, y)
        if require_curvature:
            ss = kernels.dot(s, s)
            yy = kernels.dot(y, y)
            if not sy > CURVATURE_TOL * np.sqrt(ss * yy):
                return False

        if self._count == self.m:
            self._evict_oldest()
        c = self._count
        self._s[c] = s
        self._y[c] = y

        # border update: one new row/column per Gram matrix
        s_old = self._s[:c]
        y_old = self._y[:c]
        sts_col = kernels.project(s_old, s)
        yty_col = kernels.project(y_old, y)
        sty_col = kernels.project(s_old, y)  # s_i' y_new
        sty_row = kernels.project(y_old, s)  # s_new' y_i
        self._sts[:c, c] = sts_col
        self._sts[c, :c] = sts_col
        self._sts[c, c] = kernels.dot(s, s)
        self._yty[:c, c] = yty_col
        self._yty[c, :c] = yty_col
        self._yty[c, c] = kernels.dot(y, y)
        self._sty[:c, c] = sty_col
        self._sty[c, :c] = sty_row
        self._sty[c, c] = sy

        self._count = c + 1
        self.version += 1
        self.pushed += 1
        return True

    def _evict_oldest(self):
        c = self._count
        self._s[: c - 1] = self._s[1:c]
        self._y[: c - 1] = self._y[1:c]
        for g in (self._sts, self._sty, self._yty):
            g[: c - 1, : c - 1] = g[1:c, 1:c]
        self._count = c - 1

    def clear(self):
        self._count = 0
        self.version += 1

    def check_fresh(self, version):
        if version != self.version:
            raise StaleStateError("pair buffer changed since the state was built; rebuild it")


def push_pair(buf, s, y, require_curvature=False):
    """Functional spelling of :meth:`PairBuffer.push`."""
    return buf.push(s, y, require_curvature=require_curvature)
