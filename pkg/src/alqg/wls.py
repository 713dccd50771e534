"""Continuous-time weighted least squares, discretized per micro-step.

The parameter matrix ``theta`` has shape ``(n + m, n)`` with
``theta' = [A, B]`` and regressor ``phi = [x; u]``. The covariance update
is the exact rank-one inverse update, so ``P^{-1}`` always equals
``I + sum a_i phi_i phi_i' h_i``.
"""

from dataclasses import dataclass, replace

import numpy as np

from .stabcheck import pbh_detectable, pbh_stabilizable, q_sqrt, split_theta

E = np.e
SYMMETRIZE_EVERY = 10_000


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class EstimatorState:
    theta: np.ndarray
    P: np.ndarray
    r: float
    gram_unweighted: np.ndarray
    steps: int = 0

    @property
    def n(self):
        return self.theta.shape[1]

    @property
    def m(self):
        return self.theta.shape[0] - self.theta.shape[1]


def default_theta0(n, m):
    """``A(0) = -I``, ``B(0)`` = identity padded to ``n x m``."""
    return np.vstack([-np.eye(n), np.eye(n, m).T])


def init(theta0, n, m, Q=None):
    """Fresh estimator with ``P(0) = I``.

    When ``Q`` is given, the initial model must be stabilizable and
    ``(A(0), Q^{1/2})`` detectable.
    """
    theta0 = np.array(theta0, dtype=float).reshape(n + m, n)
    A0, B0 = split_theta(theta0, n)
    if not pbh_stabilizable(A0, B0):
        raise EstimatorError("initial estimate (A(0), B(0)) is not stabilizable")
    if Q is not None and not pbh_detectable(A0, q_sqrt(Q)):
        raise EstimatorError("initial estimate (A(0), Q^1/2) is not detectable")
    N = n + m
    return EstimatorState(theta0, np.eye(N), 1.0, np.zeros((N, N)))


def weight(r):
    """``1 / log^2 r`` with ``r`` clamped below at ``e``."""
    return 1.0 / np.log(max(r, E)) ** 2


def step(s, phi, dx, h):
    """One micro-step of the estimator; returns a new state."""
    phi = np.asarray(phi, dtype=float)
    dx = np.asarray(dx, dtype=float)
    if h <= 0:
        raise EstimatorError("step size must be positive")
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(dx))):
        raise EstimatorError("non-finite regressor or increment")
    r = s.r + float(phi @ phi) * h
    a = weight(r)
    Pphi = s.P @ phi
    denom = 1.0 + a * h * float(phi @ Pphi)
    P = s.P - (a * h / denom) * np.outer(Pphi, Pphi)
    steps = s.steps + 1
    if steps % SYMMETRIZE_EVERY == 0:
        P = 0.5 * (P + P.T)
    innovation = dx - s.theta.T @ phi * h
    theta = s.theta + a * np.outer(Pphi / denom, innovation)
    gram = s.gram_unweighted + np.outer(phi, phi) * h
    return replace(s, theta=theta, P=P, r=r, gram_unweighted=gram, steps=steps)
