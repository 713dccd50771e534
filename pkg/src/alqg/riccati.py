"""Continuous-time algebraic Riccati equation, stabilizing solution.

Solves ``A'X + XA + Q - X B R^{-1} B' X = 0`` via the ordered real Schur form
of the Hamiltonian, followed by Newton (Kleinman) polishing steps.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .matkit import is_hurwitz, max_real_part

CARE_TOL = 1e-9


class CareError(ArithmeticError):
    """No stabilizing solution could be extracted."""


@dataclass(frozen=True)
class CareProblem:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        m = B.shape[1]
        if A.shape != (n, n) or Q.shape != (n, n) or R.shape != (m, m):
            raise ValueError("inconsistent CARE dimensions")
        if np.abs(Q - Q.T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(Q).max(initial=0.0)):
            raise ValueError("Q must be symmetric")
        if n and np.linalg.eigvalsh(Q).min() < -1e-10:
            raise ValueError("Q must be positive semidefinite")
        if np.abs(R - R.T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(R).max(initial=0.0)):
            raise ValueError("R must be symmetric")
        if m and np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be positive definite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))
        object.__setattr__(self, "R", 0.5 * (R + R.T))

    @property
    def S(self):
        return self.B @ np.linalg.solve(self.R, self.B.T)


@dataclass(frozen=True)
class CareSolution:
    X: np.ndarray
    L: np.ndarray
    residual_norm: float
    closed_loop_margin: float


def care_residual(p, X):
    return p.A.T @ X + X @ p.A + p.Q - X @ p.S @ X


def relative_residual(p, X):
    """Frobenius residual scaled by the size of the terms that make it up."""
    res = np.linalg.norm(care_residual(p, X))
    nX = np.linalg.norm(X)
    scale = 1.0 + np.linalg.norm(p.Q) + 2 * np.linalg.norm(p.A) * nX + np.linalg.norm(p.S) * nX**2
    return res / scale


def _newton_step(p, X):
    K = np.linalg.solve(p.R, p.B.T @ X)
    Ac = p.A - p.B @ K
    rhs = -(p.Q + K.T @ p.R @ K)
    Xn = sla.solve_continuous_lyapunov(Ac.T, rhs)
    return 0.5 * (Xn + Xn.T)


def _schur_solution(p):
    n = p.A.shape[0]
    H = np.block([[p.A, -p.S], [-p.Q, -p.A.T]])
    T, Z, sdim = sla.schur(H, output="real", sort="lhp")
    if sdim != n:
        raise CareError(
            f"stable invariant subspace has dimension {sdim}, expected {n} "
            "(pair not stabilizable or not detectable)"
        )
    U1, U2 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(U1) > 1e12:
        raise CareError("stable subspace basis is singular")
    X = np.linalg.solve(U1.T, U2.T).T
    return 0.5 * (X + X.T)


def solve_care(p, tol=CARE_TOL, max_polish=6):
    """Stabilizing solution of the CARE posed by ``p``.

    One Newton pass always runs after the Schur extraction; more are taken
    (up to ``max_polish``) while the relative residual exceeds ``tol``.
    """
    n = p.A.shape[0]
    if n == 0:
        return CareSolution(np.zeros((0, 0)), np.zeros((p.B.shape[1], 0)), 0.0, -np.inf)
    X = _schur_solution(p)
    for i in range(max_polish):
        try:
            Xn = _newton_step(p, X)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise CareError(f"Newton refinement failed: {exc}") from exc
        if not np.all(np.isfinite(Xn)):
            raise CareError("Newton refinement diverged")
        X = Xn
        if relative_residual(p, X) <= tol:
            break
    L = -np.linalg.solve(p.R, p.B.T @ X)
    margin = max_real_part(p.A + p.B @ L)
    if not margin < 0:
        raise CareError(f"solution is not stabilizing (closed-loop margin {margin:.3e})")
    if relative_residual(p, X) > tol:
        raise CareError(f"residual {relative_residual(p, X):.3e} above tolerance {tol:.1e}")
    return CareSolution(X, L, float(np.linalg.norm(care_residual(p, X))), margin)


def oracle_cost(p, D, tol=CARE_TOL):
    """Optimal ergodic cost ``tr(D' X D)`` of the known-parameter problem."""
    D = np.asarray(D, dtype=float).reshape(p.A.shape[0], -1)
    X = solve_care(p, tol).X
    return float(np.trace(D.T @ X @ D))


def solve_block_care(Abar, Bbar, Dbar, Qbar, R, n1, tol=CARE_TOL):
    """Solve the CARE of a block upper-triangular system piece by piece.

    With ``Abar = [[A1, A2], [0, A3]]`` and ``Bbar = [B1; 0]`` the equation
    splits into a Riccati equation for ``X1``, a Sylvester equation for
    ``X2`` and a Lyapunov equation for ``X3``. ``A3`` must be Hurwitz.
    ``Dbar`` is accepted for interface symmetry; the solution does not
    depend on it.

    Returns
    -------
    X1, X2, X3 : ndarray
        Blocks of shape ``(n1, n1)``, ``(n1, n - n1)``, ``(n - n1, n - n1)``.
    """
    Abar = np.atleast_2d(np.asarray(Abar, dtype=float))
    n = Abar.shape[0]
    Bbar = np.asarray(Bbar, dtype=float).reshape(n, -1)
    Qbar = np.atleast_2d(np.asarray(Qbar, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if not 0 <= n1 <= n:
        raise ValueError("n1 out of range")
    A1, A2, A3 = Abar[:n1, :n1], Abar[:n1, n1:], Abar[n1:, n1:]
    B1 = Bbar[:n1]
    Q1, Q2, Q3 = Qbar[:n1, :n1], Qbar[:n1, n1:], Qbar[n1:, n1:]
    if n1 < n and not is_hurwitz(A3):
        raise CareError("A3 block is not Hurwitz; system is not stabilizable")

    if n1 > 0:
        X1 = solve_care(CareProblem(A1, B1, Q1, R), tol).X
    else:
        X1 = np.zeros((0, 0))
    S1 = B1 @ np.linalg.solve(R, B1.T)
    if n1 == n:
        return X1, np.zeros((n1, 0)), np.zeros((0, 0))
    if n1 > 0:
        X2 = sla.solve_sylvester(A1.T - X1 @ S1, A3, -(Q2 + X1 @ A2))
    else:
        X2 = np.zeros((0, n - n1))
    rhs = -(X2.T @ A2 + A2.T @ X2 + Q3 - X2.T @ S1 @ X2)
    X3 = sla.solve_continuous_lyapunov(A3.T, rhs)
    return X1, X2, 0.5 * (X3 + X3.T)


def assemble_blocks(X1, X2, X3):
    return np.block([[X1, X2], [X2.T, X3]])
