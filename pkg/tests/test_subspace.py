import itertools

import numpy as np
import pytest

from alqg import subspace as sub


def brute_rank(A, B0):
    # column-normalized Krylov matrix keeps matrix_rank's relative tolerance meaningful
    K = np.hstack([np.linalg.matrix_power(A, i) @ B0 for i in range(A.shape[0])])
    norms = np.linalg.norm(K, axis=0)
    K = K[:, norms > 0] / norms[norms > 0]
    return np.linalg.matrix_rank(K) if K.size else 0


def test_krylov_examples():
    A = np.array([[0.5, 0.3], [0.0, -1.0]])
    V, n1 = sub.controllable_subspace(A, np.array([[1.0], [0.0]]))
    assert n1 == 1
    assert np.allclose(V, [[1.0], [0.0]])
    _, n1 = sub.controllable_subspace(A, np.array([[0.0], [1.0]]))
    assert n1 == 2
    V, n1 = sub.controllable_subspace(A, np.zeros((2, 1)))
    assert n1 == 0 and V.shape == (2, 0)


def test_krylov_dimension_of_hidden_block(rng):
    # generic blocks: the reachable space is exactly the first nc coordinates, rotated
    for _ in range(200):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(1, 3))
        nc = int(rng.integers(0, n + 1))
        Abar = rng.standard_normal((n, n))
        Abar[nc:, :nc] = 0.0
        Bbar = np.zeros((n, k))
        Bbar[:nc] = rng.standard_normal((nc, k))
        T, _ = np.linalg.qr(rng.standard_normal((n, n)))
        V, n1 = sub.controllable_subspace(T @ Abar @ T.T, T @ Bbar)
        assert n1 == nc
        assert np.allclose(V.T @ V, np.eye(n1), atol=1e-10)
        if nc:
            assert sub.subspace_angle_deg(V, T[:, :nc]) < 1e-5


def test_krylov_rank_vs_brute_force(rng):
    for _ in range(200):
        n = int(rng.integers(1, 5))
        A = rng.standard_normal((n, n))
        B0 = rng.standard_normal((n, 1)) * (rng.random() < 0.9)
        _, n1 = sub.controllable_subspace(A, B0)
        assert n1 == brute_rank(A, B0)


def test_block_decomposition_2x2():
    A = np.array([[0.5, 0.3], [0.0, -1.0]])
    B = np.array([[1.0], [0.0]])
    D = np.array([[1.0], [0.0]])
    dec = sub.build_decomposition(A, B, D)
    assert dec.n1 == 1
    assert dec.A1 == pytest.approx(np.array([[0.5]]))
    assert dec.A2 == pytest.approx(np.array([[0.3]]))
    assert dec.A3 == pytest.approx(np.array([[-1.0]]))
    assert dec.B1 == pytest.approx(np.array([[1.0]]))
    assert dec.D1 == pytest.approx(np.array([[1.0]]))


def test_block_decomposition_permuted_similarity():
    A0 = np.array([[0.5, 0.3], [0.0, -1.0]])
    B0 = np.array([[1.0], [0.0]])
    Pm = np.array([[0.0, 1.0], [1.0, 0.0]])
    A, B = Pm @ A0 @ Pm.T, Pm @ B0
    dec = sub.build_decomposition(A, B, B)
    assert dec.n1 == 1
    assert abs(dec.A1[0, 0] - 0.5) < 1e-12
    assert abs(dec.A3[0, 0] + 1.0) < 1e-12
    Abar = dec.U.T @ A @ dec.U
    assert abs(Abar[1, 0]) < 1e-12


def test_weak_space_diag():
    W = sub.weak_space(np.diag([100.0, 0.1]), 100)
    assert W.shape == (2, 1)
    assert np.allclose(np.abs(W[:, 0]), [0.0, 1.0])


def test_weak_space_requires_k2():
    with pytest.raises(ValueError):
        sub.weak_space(np.eye(2), 1)


def test_mask_exact_zeros(rng):
    A = np.array([[0.5, 0.3], [0.0, -1.0]])
    B = np.array([[1.0], [0.0]])
    dec = sub.build_decomposition(A, B, B)
    M = sub.masked_estimate(rng.standard_normal((3, 2)), dec)
    assert np.all(M[:, 1] == 0.0)


def test_mask_of_truth():
    A = np.array([[0.5, 0.3], [0.0, -1.0]])
    B = np.array([[1.0], [0.0]])
    dec = sub.build_decomposition(A, B, B)
    theta = np.vstack([A.T, B.T])
    M = sub.masked_estimate(theta, dec)
    assert M == pytest.approx(np.array([[0.5, 0.0, 1.0], [0.0, 0.0, 0.0]]), abs=1e-12)


def test_mask_shape_check():
    dec = sub.Decomposition(U=np.eye(2), n1=1)
    with pytest.raises(ValueError):
        sub.masked_estimate(np.zeros((3, 3)), dec)


def test_infer_from_gram():
    # regressor [x1, x2, u]: x2 never excited
    G = np.diag([500.0, 0.5, 800.0])
    G[0, 2] = G[2, 0] = 100.0
    dec = sub.infer_decomposition_from_data(G, 200, 2)
    assert dec.n1 == 1
    assert sub.subspace_angle_deg(dec.U[:, 1:], np.array([[0.0], [1.0]])) < 1e-6


def test_infer_full_rank_gram():
    dec = sub.infer_decomposition_from_data(np.eye(3) * 1e3, 100, 2)
    assert dec.n1 == 2
    assert np.array_equal(dec.U, np.eye(2))


def test_infer_rejects_input_weak_direction():
    with pytest.raises(sub.DecompositionError):
        sub.infer_decomposition_from_data(np.diag([1e3, 1e3, 0.1]), 2, 2)


def test_subspace_angle():
    e1 = np.array([[1.0], [0.0]])
    tilt = np.array([[np.cos(0.1)], [np.sin(0.1)]])
    assert sub.subspace_angle_deg(e1, tilt) == pytest.approx(np.rad2deg(0.1))
    assert sub.subspace_angle_deg(e1, e1) == pytest.approx(0.0, abs=1e-7)


def test_fix_signs_convention(rng):
    V = sub._fix_signs(rng.standard_normal((4, 3)))
    for col in V.T:
        assert col[np.argmax(np.abs(col))] > 0
