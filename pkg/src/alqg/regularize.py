"""Random regularization of the least-squares estimate.

At each integer time a candidate perturbation is drawn uniformly from the
Frobenius unit ball; it replaces the current one only when it raises the
certificate objective by at least the factor ``gamma_reg``. The perturbed
estimate ``theta(k) - P(k)^{1/2} beta(k)`` is then held on ``(k, k + 1]``.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .matkit import sym_sqrt
from .stabcheck import f_objective

GAMMA_REG = 1.2


@dataclass(frozen=True)
class RegularizerState:
    beta: np.ndarray
    log_f_current: float
    gamma_reg: float
    rng: np.random.Generator
    theta_hat: np.ndarray
    k: int = 0
    switched: bool = False
    degenerate: bool = False


@dataclass(frozen=True)
class StepInfo:
    """What happened at one update; consumed by the event log."""

    k: int
    log_f_eta: float
    log_f_prev: float
    switched: bool
    degenerate: bool


def init(theta0, gamma_reg=GAMMA_REG, rng=None):
    if not 1.0 < gamma_reg < math.sqrt(2.0):
        raise ValueError("gamma_reg must lie in (1, sqrt(2))")
    theta0 = np.asarray(theta0, dtype=float)
    return RegularizerState(
        beta=np.zeros_like(theta0),
        log_f_current=-np.inf,
        gamma_reg=gamma_reg,
        rng=rng if rng is not None else np.random.default_rng(),
        theta_hat=theta0.copy(),
    )


def sample_eta(rng, n, m):
    """Uniform draw from the Frobenius unit ball of ``(n + m) x n`` matrices."""
    d = n * (n + m)
    g = rng.standard_normal(d)
    g /= np.linalg.norm(g)
    radius = rng.random() ** (1.0 / d)
    return (radius * g).reshape(n + m, n)


def accepts(log_f_eta, log_f_prev, gamma_reg):
    """The switching rule ``f(eta) >= gamma * f(beta_prev)`` in log form."""
    if not np.isfinite(log_f_eta):
        return False
    if not np.isfinite(log_f_prev):
        return True
    return log_f_eta >= math.log(gamma_reg) + log_f_prev


def regularize_step(s, theta_k, P_k, Qh, k):
    """Advance the regularizer to integer time ``k >= 1``.

    Returns the new state and a :class:`StepInfo`. When both the candidate
    and the retained perturbation give a degenerate model, ``beta`` is kept
    and the state is flagged ``degenerate``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    theta_k = np.asarray(theta_k, dtype=float)
    n = theta_k.shape[1]
    m = theta_k.shape[0] - n
    root = sym_sqrt(P_k)
    eta = sample_eta(s.rng, n, m)
    log_eta = f_objective(theta_k - root @ eta, Qh).log_value
    log_prev = f_objective(theta_k - root @ s.beta, Qh).log_value
    switched = accepts(log_eta, log_prev, s.gamma_reg)
    beta = eta if switched else s.beta
    log_cur = log_eta if switched else log_prev
    degenerate = not np.isfinite(log_cur)
    info = StepInfo(k, log_eta, log_prev, switched, degenerate)
    new = replace(
        s,
        beta=beta,
        log_f_current=log_cur,
        theta_hat=theta_k - root @ beta,
        k=k,
        switched=switched,
        degenerate=degenerate,
    )
    return new, info


def hold_index(t):
    """Index ``k`` with ``t`` in ``(k, k + 1]``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return math.ceil(t) - 1


def hold(history, t):
    """Piecewise-constant estimate at time ``t``.

    ``history`` is either a sequence/mapping from ``k`` to the estimate
    produced at the ``k``-th update, or a :class:`RegularizerState`, which
    only answers for its own interval.
    """
    k = hold_index(t)
    if isinstance(history, RegularizerState):
        if history.k != k:
            raise ValueError(f"state holds interval {history.k}, t={t} needs {k}")
        return history.theta_hat
    return history[k]
