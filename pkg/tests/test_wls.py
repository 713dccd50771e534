import numpy as np
import pytest

from alqg import wls
from alqg.matkit import sym_sqrt


def test_weight_values():
    assert wls.weight(np.e) == pytest.approx(1.0)
    assert wls.weight(np.e**2) == pytest.approx(0.25)
    assert wls.weight(1.0) == 1.0


def test_init_default_accepted():
    s = wls.init(wls.default_theta0(3, 2), 3, 2, Q=np.eye(3))
    assert np.array_equal(s.P, np.eye(5))
    assert s.r == 1.0
    assert np.array_equal(s.gram_unweighted, np.zeros((5, 5)))


def test_init_rejects_unstabilizable():
    with pytest.raises(wls.EstimatorError):
        wls.init(np.array([[1.0], [0.0]]), 1, 1)


def test_init_rejects_undetectable():
    with pytest.raises(wls.EstimatorError):
        wls.init(np.array([[1.0], [1.0]]), 1, 1, Q=np.zeros((1, 1)))


def test_zero_regressor_is_noop():
    s = wls.init(wls.default_theta0(2, 1), 2, 1)
    s2 = wls.step(s, np.zeros(3), np.array([0.3, -0.1]), 0.01)
    assert np.array_equal(s2.theta, s.theta)
    assert np.array_equal(s2.P, s.P)
    assert s2.r == s.r
    assert np.array_equal(s2.gram_unweighted, s.gram_unweighted)


def test_single_step_matches_inverse():
    s = wls.init(wls.default_theta0(2, 1), 2, 1)
    phi = np.array([1.0, 0.0, 0.0])
    s2 = wls.step(s, phi, np.zeros(2), 1.0)
    a = wls.weight(2.0)
    assert np.allclose(s2.P, np.linalg.inv(np.eye(3) + a * np.outer(phi, phi)), atol=1e-15)


def test_closed_form_after_1000_steps(rng):
    n, m = 2, 2
    s = wls.init(wls.default_theta0(n, m), n, m)
    info = np.eye(n + m)
    r = 1.0
    for _ in range(1000):
        phi = rng.standard_normal(n + m) * 3
        h = rng.uniform(1e-3, 1e-1)
        s = wls.step(s, phi, rng.standard_normal(n) * 0.1, h)
        r += phi @ phi * h
        info += np.outer(phi, phi) * h / np.log(max(r, np.e)) ** 2
    P_direct = np.linalg.inv(info)
    assert np.linalg.norm(s.P - P_direct) <= 1e-6 * np.linalg.norm(P_direct)


def test_loewner_monotone(rng):
    s = wls.init(wls.default_theta0(2, 1), 2, 1)
    probes = rng.standard_normal((20, 3))
    prev = np.einsum("ij,jk,ik->i", probes, s.P, probes)
    for _ in range(300):
        s = wls.step(s, rng.standard_normal(3), rng.standard_normal(2), 0.05)
        cur = np.einsum("ij,jk,ik->i", probes, s.P, probes)
        assert np.all(cur <= prev + 1e-14)
        prev = cur


def test_noise_free_truth_is_fixed_point(rng):
    A = np.array([[0.2, 1.0], [-0.5, -0.3]])
    B = np.array([[0.0], [1.0]])
    theta = np.vstack([A.T, B.T])
    s = wls.EstimatorState(theta.copy(), np.eye(3), 1.0, np.zeros((3, 3)))
    x = np.array([1.0, -1.0])
    h = 1e-2
    for _ in range(500):
        u = np.array([-x[1]]) + rng.standard_normal(1)
        dx = (A @ x + B @ u) * h
        s = wls.step(s, np.concatenate([x, u]), dx, h)
        x = x + dx
    assert np.abs(s.theta - theta).max() < 1e-12


def test_step_rejects_nonfinite():
    s = wls.init(wls.default_theta0(1, 1), 1, 1)
    with pytest.raises(wls.EstimatorError):
        wls.step(s, np.array([np.nan, 0.0]), np.zeros(1), 0.1)


def test_normalized_error_stays_bounded(rng):
    """||P^{-1/2}(theta - theta_true)|| along a noisy closed-loop trajectory."""
    A, B, D = 0.5, 1.0, 0.5
    theta_true = np.array([[A], [B]])
    s = wls.init(np.array([[-1.0], [1.0]]), 1, 1)
    x, h = 0.0, 0.01
    start = np.linalg.norm(s.theta - theta_true, 2)
    worst = 0.0
    for i in range(20000):
        u = -1.6 * x + 0.5 * rng.standard_normal()
        dx = (A * x + B * u) * h + D * np.sqrt(h) * rng.standard_normal()
        s = wls.step(s, np.array([x, u]), np.array([dx]), h)
        x += dx
        if i % 100 == 0:
            root_inv = np.linalg.inv(sym_sqrt(s.P))
            worst = max(worst, np.linalg.norm(root_inv @ (s.theta - theta_true), 2))
    # ceiling: a few noise standard deviations above the prior mismatch
    assert worst < 5 * (1 + start)
