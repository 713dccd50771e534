"""Certainty-equivalence gain with a diminishing excitation bridge."""

from dataclasses import dataclass, replace

import numpy as np

from .riccati import CARE_TOL, CareError, CareProblem, solve_care
from .stabcheck import split_theta

EXCITATION_EXPONENT = 0.2


@dataclass(frozen=True)
class ControllerState:
    L: np.ndarray
    X: np.ndarray
    k: int
    gamma_k: float
    v_anchor: np.ndarray
    closed_loop: np.ndarray
    fallback: bool = False


def excitation_gain(k, exponent=EXCITATION_EXPONENT):
    """``(1/k)^exponent`` for ``k >= 1`` and 0 at ``k = 0``."""
    if k <= 0:
        return 0.0
    return float(k) ** (-exponent)


def initial_state(n, m):
    """Placeholder before the first refresh; any CARE failure at ``k = 0`` keeps a zero gain."""
    return ControllerState(
        L=np.zeros((m, n)),
        X=np.zeros((n, n)),
        k=-1,
        gamma_k=0.0,
        v_anchor=np.zeros(m),
        closed_loop=np.zeros((n, n)),
    )


def refresh(theta_hat, Q, R, prev, k, v_anchor=None, exponent=EXCITATION_EXPONENT, tol=CARE_TOL):
    """Recompute the gain for interval ``(k, k + 1]`` from the held estimate.

    A failed CARE keeps the previous ``L`` and ``X`` and sets ``fallback``;
    the excitation amplitude and anchor advance regardless.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    n = theta_hat.shape[1]
    A, B = split_theta(theta_hat, n)
    if v_anchor is None:
        v_anchor = prev.v_anchor
    v_anchor = np.array(v_anchor, dtype=float)
    gamma_k = excitation_gain(k, exponent)
    try:
        sol = solve_care(CareProblem(A, B, Q, R), tol)
    except (CareError, np.linalg.LinAlgError, ValueError):
        return replace(
            prev, k=k, gamma_k=gamma_k, v_anchor=v_anchor,
            closed_loop=A + B @ prev.L, fallback=True,
        )
    return ControllerState(
        L=sol.L, X=sol.X, k=k, gamma_k=gamma_k, v_anchor=v_anchor,
        closed_loop=A + B @ sol.L, fallback=False,
    )


def control(s, x, v_now):
    return s.L @ np.asarray(x, dtype=float) + s.gamma_k * (np.asarray(v_now, dtype=float) - s.v_anchor)
