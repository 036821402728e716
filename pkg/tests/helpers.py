"""Random instances shared by the test modules."""
import numpy as np

from qnsolve.qnstore import PairBuffer

PHIS = (0.0, 0.25, 0.5, 0.75, 1.0)


def spd_buffer(rng, n, npairs, gamma=1.0, m=None):
    """Pairs ``y = A s`` for a random SPD ``A``; every update class is defined."""
    G = rng.standard_normal((n, n))
    A = G @ G.T / n + np.eye(n)
    buf = PairBuffer(n, m=m or npairs, gamma=gamma)
    for _ in range(npairs):
        s = rng.standard_normal(n)
        buf.push(s, A @ s)
    return buf


def sr1_buffer(rng, n, npairs, gamma=1.0):
    """Pairs from a symmetric indefinite ``A`` (no curvature condition)."""
    G = rng.standard_normal((n, n))
    A = 0.5 * (G + G.T) + 2.0 * gamma * np.eye(n)
    buf = PairBuffer(n, m=npairs, gamma=gamma)
    for _ in range(npairs):
        s = rng.standard_normal(n)
        buf.push(s, A @ s)
    return buf


def rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
