import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nntk import SymMatrix, convergence_report, limit_trajectory
from nntk.errors import InputError


def spd_with_eigs(eigs, seed):
    rng = np.random.default_rng(seed)
    n = len(eigs)
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return SymMatrix((Q * np.asarray(eigs)) @ Q.T), Q


def test_zero_step_size_stays_at_zero():
    B, _ = spd_with_eigs([0.3, 0.9], 0)
    lt = limit_trajectory(B, [1.0, -2.0], 0.0, 5)
    assert np.all(lt.f_star == 0)


def test_identity_kernel_one_step():
    y = np.array([0.3, -1.0, 2.0])
    lt = limit_trajectory(SymMatrix(np.eye(3)), y, 1.0, 3)
    np.testing.assert_array_equal(lt.f_star[1], y)
    assert lt.residual_norms[1] == 0.0


def test_scalar_geometric_recursion():
    lt = limit_trajectory(SymMatrix([[0.5]]), [1.0], 1.0, 10)
    np.testing.assert_allclose(lt.f_star[:, 0], 1 - 0.5 ** np.arange(11), rtol=1e-15)


def test_initial_state_and_shapes():
    B, _ = spd_with_eigs([0.2, 0.5, 0.7], 1)
    lt = limit_trajectory(B, [1.0, 2.0, 3.0], 1.0, 4)
    assert lt.f_star.shape == (5, 3) and np.all(lt.f_star[0] == 0)
    np.testing.assert_allclose(lt.losses, lt.residual_norms**2 / 6)
    with pytest.raises(InputError):
        limit_trajectory(B, [1.0, 2.0], 1.0, 4)


def test_residual_recursion_per_step():
    B, _ = spd_with_eigs([0.1, 0.4, 0.95, 0.6], 2)
    y = np.random.default_rng(2).normal(size=4)
    alpha = 1.2
    lt = limit_trajectory(B, y, alpha, 30)
    R = np.eye(4) - alpha * B.entries
    res = y - lt.f_star
    for k in range(30):
        np.testing.assert_allclose(res[k + 1], R @ res[k], rtol=0, atol=1e-13 * np.linalg.norm(res[k]))


def test_residual_matches_matrix_power():
    B, _ = spd_with_eigs([0.05, 0.3, 0.8, 1.0, 0.5], 3)
    y = np.random.default_rng(3).normal(size=5)
    alpha = 0.9
    lt = limit_trajectory(B, y, alpha, 60)
    R = np.eye(5) - alpha * B.entries
    for k in (1, 10, 60):
        direct = np.linalg.matrix_power(R, k) @ y
        assert np.linalg.norm((y - lt.f_star[k]) - direct) <= 1e-11 * np.linalg.norm(y)


def test_report_identity():
    rep = convergence_report(SymMatrix(np.eye(4)), 0.4)
    assert rep.alpha_interval == (0.0, 1.0)
    assert rep.rate == pytest.approx(0.6)
    assert rep.admissible


def test_report_two_eigs():
    B, _ = spd_with_eigs([0.5, 0.8], 4)
    rep = convergence_report(B, 1.0)
    assert rep.rate == pytest.approx(0.5, abs=1e-14)
    assert rep.alpha_interval[1] == pytest.approx(2 / 1.3, rel=1e-14)
    assert rep.admissible
    assert not convergence_report(B, 1.6).admissible


def test_loss_ratio_is_rate_squared_for_scalar_kernel():
    lam, alpha = 0.35, 1.0
    lt = limit_trajectory(SymMatrix(lam * np.eye(3)), [1.0, -0.5, 2.0], alpha, 8)
    ratios = lt.losses[1:] / lt.losses[:-1]
    np.testing.assert_allclose(ratios, convergence_report(SymMatrix(lam * np.eye(3)), alpha).rate ** 2, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31), st.floats(0.01, 0.99))
def test_envelope_property(n, seed, frac):
    rng = np.random.default_rng(seed)
    eigs = rng.uniform(0.01, 1.0, n)
    B, _ = spd_with_eigs(eigs, seed)
    rep = convergence_report(B, 1.0)
    alpha = frac * rep.alpha_interval[1]
    y = rng.normal(size=n)
    lt = limit_trajectory(B, y, alpha, 200)
    assert np.all(lt.residual_norms <= lt.bound + 1e-9 * np.linalg.norm(y))


def test_envelope_tight_on_min_eigenvector():
    B, Q = spd_with_eigs([0.2, 0.5, 0.9], 5)
    v = Q[:, 0]
    lt = limit_trajectory(B, 3 * v, 1.0, 50)
    np.testing.assert_allclose(lt.residual_norms, lt.bound, atol=1e-10)
