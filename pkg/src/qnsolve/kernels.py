"""Length-n vector kernels with backend selection and inner-product counting.

Every O(n) inner product in the solvers goes through :func:`dot` or
:func:`project`, so :func:`count_inner_products` measures exactly how many
length-n inner products an algorithm performed.

The compiled backend (``qnsolve._ckernels``) is used when importable; set
``QNSOLVE_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os
from contextlib import contextmanager

from qnsolve import _pykernels

try:
    if os.environ.get("QNSOLVE_PURE_PYTHON"):
        raise ImportError("pure-python backend requested")
    from qnsolve import _ckernels
except ImportError:
    _ckernels = None

_impl = _ckernels if _ckernels is not None else _pykernels
BACKEND = "cython" if _ckernels is not None else "python"

_tally = [0]


def available_backends():
    """Names of the backends importable in this environment."""
    return ["python"] + (["cython"] if _ckernels is not None else [])


def backend_module(name):
    if name == "python":
        return _pykernels
    if name == "cython" and _ckernels is not None:
        return _ckernels
    raise ValueError(f"backend {name!r} is not available")


def use_backend(name):
    """Switch the active backend; returns the previous backend name."""
    global _impl, BACKEND
    previous = BACKEND
    _impl = backend_module(name)
    BACKEND = name
    return previous


def dot(a, b):
    _tally[0] += 1
    return _impl.dot(a, b)


def project(rows, z):
    """``rows @ z``: one inner product per row."""
    _tally[0] += rows.shape[0]
    return _impl.project(rows, z)


def accumulate(out, rows, coef):
    """``out += coef @ rows`` in place. Counts no inner products."""
    _impl.accumulate(out, rows, coef)


def axpy(alpha, x, out):
    """``out += alpha * x`` in place."""
    _impl.axpy(alpha, x, out)


class InnerProductCount:
    def __init__(self):
        self.start = _tally[0]
        self.stop = None

    @property
    def value(self):
        end = _tally[0] if self.stop is None else self.stop
        return end - self.start


@contextmanager
def count_inner_products():
    """Count length-n inner products performed inside the block.

    >>> with count_inner_products() as c:
    ...     _ = dot(a, b)
    >>> c.value
    1
    """
    rec = InnerProductCount()
    try:
        yield rec
    finally:
        rec.stop = _tally[0]
