import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import rel, sr1_buffer
from qnsolve import dense_oracle as do
from qnsolve import sr1_compact as sc
from qnsolve.errors import SingularMatrixError
from qnsolve.qnstore import PairBuffer


def test_single_pair_example():
    e1 = np.eye(4)[0]
    buf = PairBuffer.from_pairs([(e1, 2 * e1)])
    np.testing.assert_allclose(sc.solve_sr1(sc.build_sr1(buf), e1), 0.5 * e1, atol=1e-15)
    np.testing.assert_allclose(sc.multiply_sr1_forward(buf, e1), 2 * e1, atol=1e-15)


def test_y_equal_b0_s_is_singular():
    s = np.array([1.0, 2.0, 0.5])
    buf = PairBuffer.from_pairs([(s, 3.0 * s)], gamma=3.0)
    with pytest.raises(SingularMatrixError):
        sc.build_sr1(buf)
    with pytest.raises(SingularMatrixError):
        sc.build_sr1_forward(buf)


def test_symmetric_inverse_indefinite():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(sc.symmetric_inverse(A), A)
    with pytest.raises(SingularMatrixError):
        sc.symmetric_inverse(np.zeros((2, 2)))
    with pytest.raises(SingularMatrixError):
        sc.symmetric_inverse(np.array([[1.0, 1.0], [1.0, 1.0]]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), npairs=st.integers(1, 6), gamma=st.floats(0.3, 3.0))
def test_matches_dense_sr1(seed, npairs, gamma):
    rng = np.random.default_rng(seed)
    buf = sr1_buffer(rng, 14, npairs, gamma=gamma)
    ref = do.dense_sr1(buf)
    inv = sc.build_sr1(buf)
    fwd = sc.build_sr1_forward(buf)
    assert rel(inv.dense(), ref.H) <= 1e-9
    assert rel(fwd.dense(), ref.B) <= 1e-9
    z = rng.standard_normal(14)
    assert rel(fwd.matvec(inv.solve(z)), z) <= 1e-9


def test_empty_buffer():
    with pytest.raises(ValueError):
        sc.build_sr1(PairBuffer(3))
