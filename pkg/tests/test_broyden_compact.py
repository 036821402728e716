import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import PHIS, rel, spd_buffer
from qnsolve import broyden_compact as bc
from qnsolve import dense_oracle as do
from qnsolve.errors import DegenerateUpdateError, SingularMatrixError, StaleStateError
from qnsolve.qnstore import PairBuffer


def test_lambda_scalar_limits():
    assert bc.lambda_scalar(0.0, 4.0, 2.0) == -4.0
    assert bc.lambda_scalar(1.0, 4.0, 2.0) == -2.0
    with pytest.raises(DegenerateUpdateError):
        bc.lambda_scalar(0.5, 1.0, -1.0)


def test_broyden_ratio_endpoints():
    assert bc.broyden_ratio(0.0, 1.0, 2.0, 3.0) == 1.0
    assert bc.broyden_ratio(1.0, 1.0, 2.0, 3.0) == 0.0
    # sy^2 (1-phi) / (sy^2 (1-phi) + phi yHy sBs)
    assert bc.broyden_ratio(0.5, 2.0, 1.0, 4.0) == pytest.approx(0.5)


def test_phi_out_of_range():
    buf = PairBuffer.from_pairs([(np.ones(3), np.ones(3))])
    with pytest.raises(ValueError):
        bc.build_states(buf, 1.5)


def test_empty_buffer():
    with pytest.raises(ValueError):
        bc.build_states(PairBuffer(4), 0.0)


def test_single_pair_solve_example():
    e1 = np.eye(3)[0]
    buf = PairBuffer.from_pairs([(e1, 2 * e1)])
    fwd, inv = bc.build_states(buf, 0.0)
    np.testing.assert_allclose(inv.solve(e1), 0.5 * e1, atol=1e-15)
    np.testing.assert_allclose(fwd.matvec(e1), 2 * e1, atol=1e-15)
    e2 = np.eye(3)[1]
    np.testing.assert_allclose(inv.solve(e2), e2, atol=1e-15)


def test_nonpositive_curvature_rejected():
    buf = PairBuffer.from_pairs([(np.ones(3), -np.ones(3))])
    with pytest.raises(DegenerateUpdateError):
        bc.build_states(buf, 0.5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), npairs=st.integers(1, 6),
       phi=st.sampled_from(PHIS), gamma=st.floats(0.2, 5.0))
def test_forward_and_inverse_match_dense(seed, npairs, phi, gamma):
    rng = np.random.default_rng(seed)
    buf = spd_buffer(rng, 15, npairs, gamma=gamma)
    fwd, inv = bc.build_states(buf, phi)
    ref = do.dense_broyden(buf, phi)
    assert rel(fwd.dense(), ref.B) <= 1e-11
    assert rel(inv.dense(), ref.H) <= 1e-11
    z = rng.standard_normal(15)
    assert rel(inv.solve(z), ref.H @ z) <= 1e-11
    assert rel(fwd.matvec(z), ref.B @ z) <= 1e-11


def test_per_step_scalars_match_dense():
    rng = np.random.default_rng(3)
    buf = spd_buffer(rng, 12, 5, gamma=1.4)
    for phi in PHIS:
        fwd, inv = bc.build_states(buf, phi)
        sBs, yHy = do.compact_intermediates(buf, phi)
        np.testing.assert_allclose(fwd.sBs, sBs, rtol=1e-12)
        np.testing.assert_allclose(inv.yHy, yHy, rtol=1e-12)


def test_mt_is_symmetric_and_matches_direct():
    rng = np.random.default_rng(4)
    buf = spd_buffer(rng, 20, 6)
    fwd, inv = bc.build_states(buf, 0.3)
    assert np.array_equal(inv.Mt, inv.Mt.T) or np.abs(inv.Mt - inv.Mt.T).max() < 1e-12
    direct = bc.assemble_Mtilde_direct(buf.gram, fwd.lambdas, 0.3, buf.gamma)
    assert rel(inv.Mt, direct) <= 1e-10


def test_direct_assembly_singular():
    # s'y = 0 at phi = 0 leaves the block [[0, 0], [0, -y'y]]
    e1, e2 = np.eye(2)
    buf = PairBuffer.from_pairs([(e1, e2)])
    with pytest.raises(SingularMatrixError):
        bc.assemble_Mtilde_direct(buf.gram, np.array([-1.0]), 0.0, 1.0)


def test_stale_state():
    rng = np.random.default_rng(5)
    buf = spd_buffer(rng, 8, 2, m=4)
    _, inv = bc.build_states(buf, 0.5)
    buf.push(rng.standard_normal(8), rng.standard_normal(8))
    with pytest.raises(StaleStateError):
        bc.solve(inv, np.ones(8))


def test_wrong_length():
    rng = np.random.default_rng(6)
    fwd, inv = bc.build_states(spd_buffer(rng, 8, 2), 0.5)
    with pytest.raises(ValueError):
        inv.solve(np.ones(7))
    with pytest.raises(ValueError):
        bc.multiply_forward(fwd, np.ones(9))


def test_solve_inverts_forward():
    rng = np.random.default_rng(8)
    buf = spd_buffer(rng, 200, 6, gamma=0.7)
    fwd, inv = bc.build_states(buf, 0.8)
    z = rng.standard_normal(200)
    assert rel(fwd.matvec(bc.solve(inv, z)), z) <= 1e-13
