import numpy as np
import pytest
from scipy.linalg import solve_continuous_are

from alqg import controller as ctl


def test_gain_scalar_integrator():
    s = ctl.refresh(np.array([[0.0], [1.0]]), np.eye(1), np.eye(1), ctl.initial_state(1, 1), 1)
    assert s.L == pytest.approx(np.array([[-1.0]]), abs=1e-10)
    assert not s.fallback


def test_gain_matches_scipy(rng):
    for _ in range(30):
        n, m = 3, 2
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        theta = np.vstack([A.T, B.T])
        s = ctl.refresh(theta, np.eye(n), np.eye(m), ctl.initial_state(n, m), 4)
        X = solve_continuous_are(A, B, np.eye(n), np.eye(m))
        assert np.allclose(s.L, -B.T @ X, atol=1e-7)
        assert np.linalg.eigvals(s.closed_loop).real.max() < 0


def test_fallback_keeps_previous_gain():
    good = ctl.refresh(np.array([[0.0], [1.0]]), np.eye(1), np.eye(1), ctl.initial_state(1, 1), 1)
    bad = ctl.refresh(np.array([[1.0], [0.0]]), np.eye(1), np.eye(1), good, 2)
    assert bad.fallback
    assert np.array_equal(bad.L, good.L)
    assert bad.k == 2
    assert bad.gamma_k == pytest.approx(2 ** -0.2)


def test_excitation_gain():
    assert ctl.excitation_gain(0) == 0.0
    assert ctl.excitation_gain(1) == 1.0
    assert ctl.excitation_gain(32) == pytest.approx(0.5)


def test_control_law():
    s = ctl.ControllerState(L=np.array([[-2.0, 1.0]]), X=np.eye(2), k=4, gamma_k=0.5,
                            v_anchor=np.array([1.0]), closed_loop=np.eye(2))
    u = ctl.control(s, [1.0, 3.0], [3.0])
    assert u == pytest.approx(np.array([1.0 + 0.5 * 2.0]))


def test_zero_excitation_at_start():
    s = ctl.initial_state(2, 1)
    assert ctl.control(s, [1.0, 1.0], [5.0]) == pytest.approx(np.zeros(1))
