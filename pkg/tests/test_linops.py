import numpy as np
import pytest

from decolab.errors import DimensionError, ToleranceError
from decolab.linops import (
    cluster_eigenvalues,
    embed,
    exp_i_hermitian,
    hermitian_eig,
    kernel_basis,
    kron,
    partial_trace,
    permute_subsystems,
    stacked_kernel,
)
from decolab.errors import ClusteringAmbiguityError
from decolab.sampling import random_hermitian, rng_for

from helpers import I2, KET0, KET1, MINUS, PLUS, X, Z, bell_projector


def _random_ops(rng, n, d=2):
    return [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(n)]


def test_kron_identity_and_eigenvalue():
    assert np.array_equal(kron(I2, I2), np.eye(4))
    ket01 = kron(KET0, KET1)
    np.testing.assert_allclose(kron(Z, Z) @ ket01, -ket01)


def test_kron_mixed_product():
    a, b, c, d = _random_ops(rng_for(1), 4)
    np.testing.assert_allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), atol=1e-12)


def test_kron_left_factor_most_significant():
    # |1>|0> is the third basis vector
    assert np.argmax(np.abs(kron(KET1, KET0))) == 2


def test_permute_swaps_factors():
    np.testing.assert_allclose(permute_subsystems(kron(X, Z), [2, 2], [1, 0]), kron(Z, X))
    a = _random_ops(rng_for(2), 1, 4)[0]
    np.testing.assert_array_equal(permute_subsystems(a, [2, 2], [0, 1]), a)
    twice = permute_subsystems(permute_subsystems(a, [2, 2], [1, 0]), [2, 2], [1, 0])
    np.testing.assert_allclose(twice, a)


def test_permute_unequal_dims_matches_explicit_unitary():
    a = _random_ops(rng_for(3), 1, 6)[0]
    # permutation unitary sending |i>|j> (dims 2,3) to |j>|i> (dims 3,2)
    p = np.zeros((6, 6))
    for i in range(2):
        for j in range(3):
            p[j * 2 + i, i * 3 + j] = 1
    np.testing.assert_allclose(permute_subsystems(a, [2, 3], [1, 0]), p @ a @ p.T, atol=1e-12)


def test_permute_rejects_bad_permutation():
    with pytest.raises(DimensionError):
        permute_subsystems(np.eye(4), [2, 2], [0])
    with pytest.raises(DimensionError):
        permute_subsystems(np.eye(4), [2, 2], [0, 0])


def test_partial_trace_examples():
    p00 = np.outer(kron(KET0, KET0), kron(KET0, KET0))
    np.testing.assert_allclose(partial_trace(p00, [2, 2], [0]), np.diag([1, 0]))
    np.testing.assert_allclose(partial_trace(bell_projector(), [2, 2], [0]), np.eye(2) / 2, atol=1e-15)


def test_partial_trace_preserves_trace():
    rng = rng_for(4)
    for a in _random_ops(rng, 100, 4):
        for keep in ([0], [1]):
            assert abs(np.trace(partial_trace(a, [2, 2], keep)) - np.trace(a)) < 1e-12
        assert partial_trace(a, [2, 2], []).shape == (1, 1)


def test_partial_trace_index_out_of_range():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), [2, 2], [2])


def test_partial_trace_middle_factor_against_loop():
    rng = rng_for(5)
    dims = [2, 3, 2]
    a = _random_ops(rng, 1, 12)[0]
    t = a.reshape(dims + dims)
    want = sum(t[:, j, :, :, j, :] for j in range(3)).reshape(4, 4)
    np.testing.assert_allclose(partial_trace(a, dims, [0, 2]), want, atol=1e-12)


def test_hermitian_eig_paulis():
    w, v = hermitian_eig(Z)
    np.testing.assert_allclose(w, [1, -1])
    assert abs(abs(np.vdot(v[:, 0], KET0)) - 1) < 1e-12
    w, v = hermitian_eig(X)
    np.testing.assert_allclose(w, [1, -1])
    assert abs(abs(np.vdot(v[:, 0], PLUS)) - 1) < 1e-12
    assert abs(abs(np.vdot(v[:, 1], MINUS)) - 1) < 1e-12


def test_hermitian_eig_reconstructs():
    rng = rng_for(6)
    for d in (2, 3, 5, 8):
        h = random_hermitian(d, rng)
        w, v = hermitian_eig(h)
        assert np.all(np.diff(w) <= 0)
        assert np.linalg.norm((v * w) @ v.conj().T - h) < 1e-10
        assert np.linalg.norm(v.conj().T @ v - np.eye(d)) < 1e-8


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(ToleranceError, match="tau_herm"):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_cluster_eigenvalues_groups_and_flags_ambiguity():
    groups = cluster_eigenvalues(np.array([1.0, 1.0 + 1e-12, -1.0]))
    assert [len(g) for g in groups] == [2, 1]
    with pytest.raises(ClusteringAmbiguityError):
        cluster_eigenvalues(np.array([1.0, 1.0 + 5e-7]))


def test_kernel_basis_examples():
    k = kernel_basis(np.diag([1.0, 0.0]))
    assert k.shape == (2, 1) and abs(abs(k[1, 0]) - 1) < 1e-12
    assert kernel_basis(np.eye(3)).shape == (3, 0)


def test_rank_nullity():
    rng = rng_for(7)
    for _ in range(20):
        r = int(rng.integers(0, 6))
        m = rng.normal(size=(7, r)) @ rng.normal(size=(r, 6))
        k = kernel_basis(m)
        assert k.shape[1] + np.linalg.matrix_rank(m) == 6
        assert np.linalg.norm(m @ k) < 1e-9


def test_stacked_kernel_matches_direct():
    rng = rng_for(8)
    blocks = [rng.normal(size=(3, 9)) for _ in range(2)]
    direct = kernel_basis(np.vstack(blocks))
    folded = stacked_kernel(blocks, 9)
    assert direct.shape == folded.shape
    np.testing.assert_allclose(direct @ direct.conj().T, folded @ folded.conj().T, atol=1e-10)


def test_exp_i_examples():
    np.testing.assert_allclose(exp_i_hermitian(Z, np.pi / 2), -1j * Z, atol=1e-15)
    out = exp_i_hermitian(X, np.pi / 2) @ KET0
    np.testing.assert_allclose(out, -1j * KET1, atol=1e-15)


def test_exp_i_inverse_and_unitarity():
    rng = rng_for(9)
    for _ in range(10):
        h = random_hermitian(4, rng)
        t = float(rng.uniform(-5, 5))
        u = exp_i_hermitian(h, t)
        assert np.linalg.norm(u @ exp_i_hermitian(h, -t) - np.eye(4)) < 1e-10
        assert np.linalg.norm(u.conj().T @ u - np.eye(4)) < 1e-8


def test_exp_i_rejects_non_hermitian():
    with pytest.raises(ToleranceError):
        exp_i_hermitian(np.array([[0, 1], [0, 0]]), 1.0)


def test_embed_matches_kron():
    a = _random_ops(rng_for(10), 1)[0]
    np.testing.assert_allclose(embed(a, [2, 3, 2], [2]), kron(np.eye(6), a))
    np.testing.assert_allclose(embed(a, [2, 2], [0]), kron(a, I2))
    cx = np.diag([1, 1, 0, 0]) + kron(np.diag([0, 1]), X)
    # control on the second wire of the pair
    flipped = embed(cx, [2, 2], [1, 0])
    np.testing.assert_allclose(flipped, permute_subsystems(cx, [2, 2], [1, 0]))
