"""Small dense-matrix kernels shared by the rest of the package.

Everything here is a pure function of its arguments.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

BOUNDARY_TOL = 1e-9
RANK_TOL = 1e-8


class MatkitError(ValueError):
    """Raised on malformed input or a failed decomposition."""


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    source_dim: int

    def __post_init__(self):
        if len(self.eigenvalues) != self.source_dim:
            raise MatkitError("eigenvalue count does not match source dimension")


def _square(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise MatkitError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise MatkitError(f"{name} has non-finite entries")
    return M


def _pair_conjugates(w, tol):
    """Snap nearly-conjugate eigenvalue pairs onto exact conjugates."""
    w = np.array(w, dtype=complex)
    used = np.zeros(len(w), dtype=bool)
    for i in range(len(w)):
        if used[i]:
            continue
        if abs(w[i].imag) <= tol:
            w[i] = complex(w[i].real, 0.0)
            used[i] = True
            continue
        best, best_d = -1, np.inf
        for j in range(len(w)):
            if j == i or used[j]:
                continue
            d = abs(w[j] - np.conj(w[i]))
            if d < best_d:
                best, best_d = j, d
        used[i] = True
        if best >= 0 and best_d <= tol:
            re = 0.5 * (w[i].real + w[best].real)
            im = 0.5 * (abs(w[i].imag) + abs(w[best].imag))
            sign = 1.0 if w[i].imag > 0 else -1.0
            w[i] = complex(re, sign * im)
            w[best] = complex(re, -sign * im)
            used[best] = True
    return w


def spectrum(M):
    """All eigenvalues of a real square matrix, with multiplicity.

    Conjugate pairs are made exact: two eigenvalues whose conjugate distance
    is below ``1e-8 * ||M||`` are symmetrized, and imaginary parts below that
    scale are zeroed.
    """
    M = _square(M)
    n = M.shape[0]
    if n == 0:
        return Spectrum(np.zeros(0, dtype=complex), 0)
    try:
        w = sla.eigvals(M, check_finite=False)
    except sla.LinAlgError as exc:
        raise MatkitError(f"eigenvalue iteration failed: {exc}") from exc
    scale = max(np.linalg.norm(M, 2), 1.0)
    return Spectrum(_pair_conjugates(w, 1e-8 * scale), n)


def split_half_planes(s, tol=BOUNDARY_TOL):
    """Split a spectrum into the closed right half-plane part and the rest.

    Eigenvalues with ``Re >= -tol`` count as non-negative, so values that
    sit on the imaginary axis up to rounding go to ``plus``.
    """
    if tol < 0:
        raise MatkitError("tol must be nonnegative")
    w = np.asarray(s.eigenvalues)
    mask = w.real >= -tol
    return w[mask], w[~mask]


def sym_sqrt(M, clamp_tol=1e-10):
    """Symmetric PSD square root via eigendecomposition.

    Slightly negative eigenvalues (down to ``-clamp_tol * ||M||``) are
    clamped to zero; anything more negative is rejected.
    """
    M = _square(M)
    if M.size == 0:
        return M.copy()
    norm = np.linalg.norm(M, 2)
    if np.linalg.norm(M - M.T, 2) > clamp_tol * max(norm, 1.0):
        raise MatkitError("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if w.min() < -clamp_tol * max(norm, 1.0):
        raise MatkitError(f"matrix is indefinite (min eigenvalue {w.min():.3e})")
    S = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return 0.5 * (S + S.T)


def orthonormal_range(M, rank_tol=RANK_TOL):
    """Orthonormal basis for the column space of ``M``.

    Rank is decided from singular values relative to the largest one.
    Returns an ``(rows, r)`` array; ``r`` may be zero.
    """
    if rank_tol <= 0:
        raise MatkitError("rank_tol must be positive")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rows = M.shape[0]
    if M.size == 0:
        return np.zeros((rows, 0))
    U, sv, _ = np.linalg.svd(M, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        return np.zeros((rows, 0))
    r = int(np.sum(sv > rank_tol * sv[0]))
    return U[:, :r]


def orthonormal_complement(V, n):
    """Orthonormal basis of the complement of span(V) in R^n."""
    V = np.asarray(V, dtype=float).reshape(n, -1)
    if V.shape[1] == 0:
        return np.eye(n)
    if V.shape[1] >= n:
        return np.zeros((n, 0))
    Qf, _ = np.linalg.qr(V, mode="complete")
    return Qf[:, V.shape[1]:]


def is_hurwitz(M, margin=0.0):
    """True iff every eigenvalue satisfies ``Re(lambda) < -margin``."""
    M = _square(M)
    if M.shape[0] == 0:
        return True
    return bool(np.all(sla.eigvals(M, check_finite=False).real < -margin))


def max_real_part(M):
    M = _square(M)
    if M.shape[0] == 0:
        return -np.inf
    return float(np.max(sla.eigvals(M, check_finite=False).real))
