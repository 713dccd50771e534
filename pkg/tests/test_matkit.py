import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from alqg.matkit import (
    MatkitError, Spectrum, is_hurwitz, orthonormal_range, spectrum, split_half_planes, sym_sqrt,
)

from conftest import random_psd


def test_spectrum_diagonal():
    w = spectrum(np.diag([1.0, -1.0])).eigenvalues
    assert sorted(w.real) == [-1.0, 1.0]
    assert np.all(w.imag == 0)


def test_spectrum_rotation_generator_exact_pair():
    w = spectrum(np.array([[0.0, 1.0], [-1.0, 0.0]])).eigenvalues
    assert sorted(w.imag) == [-1.0, 1.0]
    assert w[0] == np.conj(w[1])


def test_spectrum_residuals(rng):
    for _ in range(50):
        M = rng.standard_normal((5, 5))
        for lam in spectrum(M).eigenvalues:
            # eigenvector as the right singular vector of M - lam I
            _, sv, Vh = np.linalg.svd(M - lam * np.eye(5))
            v = Vh[-1].conj()
            assert np.linalg.norm((M - lam * np.eye(5)) @ v) <= 1e-8 * np.linalg.norm(M, 2)


def test_spectrum_rejects_non_square():
    with pytest.raises(MatkitError):
        spectrum(np.ones((2, 3)))


def test_spectrum_conjugate_symmetry(rng):
    for _ in range(50):
        w = spectrum(rng.standard_normal((6, 6))).eigenvalues
        assert np.allclose(np.sort_complex(w), np.sort_complex(np.conj(w)), atol=0, rtol=0)


@pytest.mark.parametrize("eigs, tol, plus, minus", [
    ([1.0, -1.0], 0.0, [1.0], [-1.0]),
    ([0.0], 0.0, [0.0], []),
    ([-1e-12], 1e-9, [-1e-12], []),
])
def test_split_half_planes(eigs, tol, plus, minus):
    p, m = split_half_planes(Spectrum(np.array(eigs, dtype=complex), len(eigs)), tol)
    assert list(p.real) == plus and list(m.real) == minus


def test_split_rejects_negative_tol():
    with pytest.raises(MatkitError):
        split_half_planes(Spectrum(np.zeros(1, dtype=complex), 1), -1.0)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
              elements=st.floats(-10, 10, allow_nan=False)))
def test_split_partitions(M):
    n = M.shape[0]
    M = M[:, :n] if M.shape[1] >= n else np.pad(M, ((0, 0), (0, n - M.shape[1])))
    s = spectrum(M)
    p, m = split_half_planes(s, 1e-9)
    assert len(p) + len(m) == s.source_dim == n


def test_sym_sqrt_known():
    assert np.allclose(sym_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(sym_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_sym_sqrt_reconstruction_1000(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        M = random_psd(rng, n)
        S = sym_sqrt(M)
        assert np.array_equal(S, S.T)
        assert np.linalg.eigvalsh(S).min() >= -1e-12 * max(1, np.linalg.norm(S, 2))
        assert np.linalg.norm(S @ S - M, 2) <= 1e-8 * (1 + np.linalg.norm(M, 2))


def test_sym_sqrt_clamps_tiny_negative():
    S = sym_sqrt(np.diag([1.0, -1e-13]))
    assert np.allclose(S, np.diag([1.0, 0.0]))


def test_sym_sqrt_rejects_indefinite():
    with pytest.raises(MatkitError):
        sym_sqrt(np.diag([1.0, -0.1]))


def test_orthonormal_range_basic():
    assert orthonormal_range(np.zeros((3, 2))).shape == (3, 0)
    V = orthonormal_range(np.array([[1.0, 2.0], [0.0, 0.0]]))
    assert V.shape == (2, 1)
    assert np.isclose(abs(V[0, 0]), 1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 7), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_orthonormal_range_properties(n, k, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, k))
    V = orthonormal_range(M, 1e-8)
    assert np.abs(V.T @ V - np.eye(V.shape[1])).max() <= 1e-10
    assert np.linalg.norm(M - V @ V.T @ M, 2) <= 10 * 1e-8 * np.linalg.norm(M, 2) + 1e-12


def test_is_hurwitz():
    assert is_hurwitz(-np.eye(2))
    assert not is_hurwitz(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert not is_hurwitz(-np.eye(2), margin=1.0)
