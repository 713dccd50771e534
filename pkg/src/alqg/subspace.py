"""Controllable-with-noise subspace, block decomposition and masked estimates.

``B0 = [B, D]``; the first ``n1`` columns of ``U`` span the Krylov space
``Im(B0) + A Im(B0) + ...``, the remaining ones its orthogonal complement.
Bases are orthonormal so ``U^{-1} = U'``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .matkit import RANK_TOL, orthonormal_complement, orthonormal_range

WEAK_U_TOL = float(np.sin(np.deg2rad(5.0)))


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class Decomposition:
    U: np.ndarray
    n1: int
    A1: np.ndarray = None
    A2: np.ndarray = None
    A3: np.ndarray = None
    B1: np.ndarray = None
    D1: np.ndarray = None

    @property
    def n(self):
        return self.U.shape[0]


def _fix_signs(V):
    """Make the largest-magnitude entry of each column positive."""
    V = np.array(V, dtype=float)
    for j in range(V.shape[1]):
        i = np.argmax(np.abs(V[:, j]))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def controllable_subspace(A, B0, rank_tol=RANK_TOL):
    """Orthonormal basis of ``Im(A | B0)`` and its dimension."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B0 = np.asarray(B0, dtype=float).reshape(n, -1)
    V = orthonormal_range(B0, rank_tol)
    for _ in range(n):
        if V.shape[1] in (0, n):
            break
        W = orthonormal_range(np.hstack([V, A @ V]), rank_tol)
        if W.shape[1] == V.shape[1]:
            break
        V = W
    return _fix_signs(V), V.shape[1]


def build_decomposition(A, B, D, rank_tol=RANK_TOL):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    D = np.asarray(D, dtype=float).reshape(n, -1)
    V, n1 = controllable_subspace(A, np.hstack([B, D]), rank_tol)
    U = np.hstack([V, _fix_signs(orthonormal_complement(V, n))])
    Ab, Bb, Db = U.T @ A @ U, U.T @ B, U.T @ D
    bound = 10 * rank_tol
    if np.linalg.norm(Ab[n1:, :n1]) > bound * max(1.0, np.linalg.norm(A)):
        raise DecompositionError("lower-left block of U'AU is not zero")
    if np.linalg.norm(Bb[n1:]) > bound * max(1.0, np.linalg.norm(B)):
        raise DecompositionError("bottom block of U'B is not zero")
    if np.linalg.norm(Db[n1:]) > bound * max(1.0, np.linalg.norm(D)):
        raise DecompositionError("bottom block of U'D is not zero")
    return Decomposition(
        U=U, n1=n1,
        A1=Ab[:n1, :n1], A2=Ab[:n1, n1:], A3=Ab[n1:, n1:],
        B1=Bb[:n1], D1=Db[:n1],
    )


def transform_theta(theta, U):
    """``U' theta' diag(U, I_m)``: the estimate in the rotated coordinates."""
    theta = np.asarray(theta, dtype=float)
    n = U.shape[0]
    m = theta.shape[0] - n
    T = sla.block_diag(U, np.eye(m)) if m else U
    return U.T @ theta.T @ T


def masked_estimate(theta_hat, dec):
    """Rotated estimate with the columns of the unexcited states zeroed.

    For the true parameters this is ``[[A1, 0, B1], [0, 0, 0]]``.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    n = dec.n
    if theta_hat.ndim != 2 or theta_hat.shape[1] != n or theta_hat.shape[0] < n:
        raise ValueError(f"theta shape {theta_hat.shape} inconsistent with n={n}")
    M = transform_theta(theta_hat, dec.U)
    M[:, dec.n1:n] = 0.0
    return M


def weak_space(gram, k):
    """Eigenvectors of the unweighted regressor Gram with eigenvalue ``< log k``."""
    if k < 2:
        raise ValueError("k must be >= 2")
    gram = np.asarray(gram, dtype=float)
    w, V = np.linalg.eigh(0.5 * (gram + gram.T))
    return _fix_signs(V[:, w < np.log(k)])


def weak_dimension_stable(gram_k, k, gram_half, k_half):
    """Whether the weak space has the same dimension at ``k`` and ``k_half``."""
    return weak_space(gram_k, k).shape[1] == weak_space(gram_half, k_half).shape[1]


def infer_decomposition_from_data(gram, k, n, u_tol=WEAK_U_TOL):
    """Estimate ``U`` and ``n1`` from the regressor Gram alone.

    The weak directions must have (numerically) no input component; their
    state parts estimate the orthogonal complement of ``Im(A | B0)``.
    ``u_tol`` bounds the input-part norm of each unit weak direction.
    """
    W = weak_space(gram, k)
    if W.shape[1] == 0:
        return Decomposition(U=np.eye(n), n1=n)
    u_part = np.linalg.norm(W[n:], axis=0)
    if np.any(u_part > u_tol):
        raise DecompositionError(
            f"weak direction has input component {u_part.max():.3g} > {u_tol:.3g}; "
            "data are not yet informative"
        )
    perp = orthonormal_range(W[:n], 1e-6)
    V = orthonormal_complement(perp, n)
    U = np.hstack([_fix_signs(V), _fix_signs(perp)])
    return Decomposition(U=U, n1=n - perp.shape[1])


def subspace_angle_deg(X, Y):
    """Largest principal angle between two column spans, in degrees."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] == 0 and Y.shape[1] == 0:
        return 0.0
    if X.shape[1] == 0 or Y.shape[1] == 0:
        return 90.0
    return float(np.rad2deg(np.max(sla.subspace_angles(X, Y))))


def strong_block_lambda_min(gram, dec):
    """Smallest eigenvalue of the Gram restricted to the excited coordinates."""
    gram = np.asarray(gram, dtype=float)
    n = dec.n
    m = gram.shape[0] - n
    T = sla.block_diag(dec.U, np.eye(m)) if m else dec.U
    G = T.T @ gram @ T
    idx = list(range(dec.n1)) + list(range(n, n + m))
    if not idx:
        return np.nan
    return float(np.linalg.eigvalsh(G[np.ix_(idx, idx)])[0])
