"""Determinant certificate for stabilizability/detectability.

``Y(A, B)`` multiplies Gram determinants of a real 2n x 2(n+m) pencil over
the spectrum of ``A``; it is positive exactly when ``(A, B)`` is
stabilizable. Products are carried as sums of logs because the factors
over- and underflow quickly, and every downstream use is a ratio.
"""

from dataclasses import dataclass

import numpy as np

from .matkit import BOUNDARY_TOL, spectrum, split_half_planes, sym_sqrt

# A normalized Gram factor whose log falls below this counts as zero.
ZERO_LOG = -60.0


@dataclass(frozen=True)
class CertificateValue:
    log_value: float
    factor_count: int

    @property
    def positive(self):
        return bool(np.isfinite(self.log_value))


def z_pencil(s, A, B):
    """``[[s1 I - A, s2 I | B, 0], [-s2 I, s1 I - A | 0, B]]`` for ``s = s1 + j s2``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    m = B.shape[1]
    s = complex(s)
    I = np.eye(n)
    M = s.real * I - A
    Z = np.zeros((2 * n, 2 * n + 2 * m))
    Z[:n, :n] = M
    Z[:n, n:2 * n] = s.imag * I
    Z[n:, :n] = -s.imag * I
    Z[n:, n:2 * n] = M
    Z[:n, 2 * n:2 * n + m] = B
    Z[n:, 2 * n + m:] = B
    return Z


def log_gram_det(Z):
    """``log det(Z Z')`` with the zero test applied to row-normalized ``Z``.

    Returns ``-inf`` when a row vanishes or the normalized determinant is
    below ``exp(ZERO_LOG)``.
    """
    norms = np.linalg.norm(Z, axis=1)
    if np.any(norms == 0.0):
        return -np.inf
    sv = np.linalg.svd(Z / norms[:, None], compute_uv=False)
    if sv.size < Z.shape[0] or np.any(sv == 0.0):
        return -np.inf
    log_norm_det = 2.0 * np.sum(np.log(sv))
    if log_norm_det < ZERO_LOG:
        return -np.inf
    return float(log_norm_det + 2.0 * np.sum(np.log(norms)))


def y_certificate(A, B, tol=BOUNDARY_TOL):
    """Log of ``Y(A, B)``; finite iff the pair is stabilizable.

    Eigenvalues enter with algebraic multiplicity. Factors for the closed
    right half-plane use ``Z(s)``, the rest use ``Z(-s)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    plus, minus = split_half_planes(spectrum(A), tol)
    total = 0.0
    for s in plus:
        total += log_gram_det(z_pencil(s, A, B))
    for s in minus:
        total += log_gram_det(z_pencil(-s, A, B))
    return CertificateValue(total, len(plus) + len(minus))


def detect_certificate(A, Qh, tol=BOUNDARY_TOL):
    """Detectability of ``(A, Qh)`` as stabilizability of the dual pair."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return y_certificate(A.T, np.asarray(Qh, dtype=float).T, tol)


def split_theta(theta, n):
    """Unpack ``theta' = [A, B]`` from an ``(n + m, n)`` parameter matrix."""
    theta = np.asarray(theta, dtype=float)
    return theta[:n].T, theta[n:].T


def f_objective(theta_candidate, Qh, tol=BOUNDARY_TOL):
    """``log Y(A, B) + log Y(A', Qh)`` for the model encoded in ``theta_candidate``."""
    n = np.atleast_2d(Qh).shape[0]
    theta_candidate = np.asarray(theta_candidate, dtype=float)
    if theta_candidate.ndim != 2 or theta_candidate.shape[1] != n or theta_candidate.shape[0] < n:
        raise ValueError(f"candidate shape {theta_candidate.shape} inconsistent with n={n}")
    A, B = split_theta(theta_candidate, n)
    ys = y_certificate(A, B, tol)
    if not ys.positive:
        return CertificateValue(-np.inf, ys.factor_count)
    yd = detect_certificate(A, Qh, tol)
    return CertificateValue(ys.log_value + yd.log_value, ys.factor_count + yd.factor_count)


def pbh_defects(A, B, tol=1e-8, boundary_tol=BOUNDARY_TOL):
    """Eigenvalues in the closed right half-plane where ``[lambda I - A, B]`` loses rank.

    Rank is judged from the smallest singular value relative to the largest
    and to ``max(1, ||A||)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    plus, _ = split_half_planes(spectrum(A), boundary_tol)
    scale = max(1.0, np.linalg.norm(A, 2))
    bad = []
    for lam in plus:
        M = np.hstack([lam * np.eye(n) - A, B.astype(complex)])
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[-1] <= tol * max(scale, sv[0]):
            bad.append(complex(lam))
    return bad


def pbh_stabilizable(A, B, tol=1e-8):
    """Popov-Belevitch-Hautus stabilizability test (independent of ``Y``)."""
    return not pbh_defects(A, B, tol)


def pbh_detectable(A, C, tol=1e-8):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    return pbh_stabilizable(A.T, C.T, tol)


def q_sqrt(Q):
    return sym_sqrt(np.atleast_2d(np.asarray(Q, dtype=float)))
