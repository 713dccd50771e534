import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alqg import regularize as reg
from alqg.stabcheck import f_objective


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), m=st.integers(1, 3))
@settings(max_examples=200, deadline=None)
def test_eta_in_unit_ball(seed, n, m):
    eta = reg.sample_eta(np.random.default_rng(seed), n, m)
    assert eta.shape == (n + m, n)
    assert np.linalg.norm(eta) <= 1.0


def test_eta_uniform_moments():
    # uniform on the unit ball in R^d: E eta = 0, E |eta|^2 = d / (d + 2)
    rng = np.random.default_rng(11)
    n, m, N = 2, 1, 100_000
    d = n * (n + m)
    draws = np.stack([reg.sample_eta(rng, n, m).ravel() for _ in range(N)])
    sq = (draws**2).sum(axis=1)
    assert abs(sq.mean() - d / (d + 2)) < 3 * sq.std() / math.sqrt(N)
    se = draws.std(axis=0) / math.sqrt(N)
    assert np.all(np.abs(draws.mean(axis=0)) < 4 * se)


@pytest.mark.parametrize("log_eta, log_prev, expected", [
    (0.0, -np.inf, True),
    (-np.inf, 0.0, False),
    (-np.inf, -np.inf, False),
    (math.log(1.5), 0.0, True),
    (math.log(1.1), 0.0, False),
    (math.log(1.2), 0.0, True),
])
def test_accept_rule(log_eta, log_prev, expected):
    assert reg.accepts(log_eta, log_prev, 1.2) is expected


def test_init_checks_gamma():
    with pytest.raises(ValueError):
        reg.init(np.zeros((2, 1)), gamma_reg=1.5)
    with pytest.raises(ValueError):
        reg.init(np.zeros((2, 1)), gamma_reg=1.0)


def test_step_first_update_switches_when_finite():
    theta = np.array([[-1.0], [1.0]])
    s = reg.init(theta, rng=np.random.default_rng(0))
    s, info = reg.regularize_step(s, theta, np.eye(2) * 1e-6, np.eye(1), 1)
    # beta starts at 0 and f(theta) is finite, so a switch needs the gamma margin
    assert info.log_f_prev == pytest.approx(f_objective(theta, np.eye(1)).log_value)
    assert s.k == 1
    assert np.allclose(s.theta_hat, theta - np.sqrt(1e-6) * s.beta, atol=1e-15)


def test_step_degenerate_keeps_beta():
    theta = np.array([[1.0], [0.0]])  # A=1, B=0: every nearby model is fine, P tiny keeps it degenerate
    s = reg.init(theta, rng=np.random.default_rng(3))
    s, info = reg.regularize_step(s, theta, np.zeros((2, 2)), np.eye(1), 1)
    assert info.degenerate and s.degenerate
    assert not info.switched
    assert np.array_equal(s.beta, np.zeros((2, 1)))


def test_step_requires_positive_k():
    s = reg.init(np.zeros((2, 1)))
    with pytest.raises(ValueError):
        reg.regularize_step(s, np.zeros((2, 1)), np.eye(2), np.eye(1), 0)


def test_log_f_nondecreasing_when_model_fixed():
    theta = np.array([[0.5, 0.1], [0.0, -0.3], [1.0, 0.0]])
    s = reg.init(theta, rng=np.random.default_rng(5))
    P = 0.1 * np.eye(3)
    current = -np.inf
    for k in range(1, 200):
        s, info = reg.regularize_step(s, theta, P, np.eye(2), k)
        assert s.log_f_current >= current
        if info.switched and np.isfinite(current):
            assert s.log_f_current >= current + math.log(1.2) - 1e-12
        current = s.log_f_current


def test_hold_boundaries():
    history = {1: "theta1", 2: "theta2"}
    assert reg.hold(history, 1.5) == "theta1"
    assert reg.hold(history, 2.0) == "theta1"
    assert reg.hold(history, 2.0 + 1e-9) == "theta2"
    with pytest.raises(ValueError):
        reg.hold(history, 0.0)


def test_hold_state_checks_interval():
    s = reg.init(np.zeros((2, 1)))
    with pytest.raises(ValueError):
        reg.hold(s, 1.5)
    assert reg.hold(s, 0.5) is s.theta_hat
