import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from gabp_mud.matrix import (SparseSymmetricMatrix, as_noise, build_augmented,
                             build_augmented_rhs)

from conftest import symmetric_matrices


def test_augmented_scalar():
    A = build_augmented([[1.0]], [0.0])
    np.testing.assert_array_equal(A.to_dense(), [[1.0, 1.0], [1.0, 0.0]])


def test_augmented_identity_blocks():
    s2 = 0.7
    A = build_augmented(np.eye(2), [s2, s2])
    expected = np.diag([1.0, 1.0, -s2, -s2])
    expected[0, 2] = expected[2, 0] = 1.0
    expected[1, 3] = expected[3, 1] = 1.0
    np.testing.assert_array_equal(A.to_dense(), expected)


def test_augmented_random_3x2_pair_count(rng):
    S = rng.choice([-1.0, 1.0], (3, 2)) / np.sqrt(3)
    A = build_augmented(S, 0.5)
    dense = A.to_dense()
    brute = sum(1 for i in range(5) for j in range(i + 1, 5) if dense[i, j] != 0)
    assert brute == A.nnz_pairs == 6
    assert A.num_directed_edges == 12


def test_augmented_block_layout(rng):
    n, k = 5, 3
    S = rng.standard_normal((n, k))
    psi = rng.uniform(0.1, 2, n)
    dense = build_augmented(S, psi).to_dense()
    np.testing.assert_array_equal(dense[:k, :k], np.eye(k))
    np.testing.assert_array_equal(dense[k:, k:], -np.diag(psi))
    np.testing.assert_array_equal(dense[k:, :k], S)
    np.testing.assert_array_equal(dense[:k, k:], S.T)


def test_augmented_dimension_mismatch():
    with pytest.raises(ValueError):
        build_augmented(np.ones((3, 2)), [1.0, 1.0])


def test_augmented_rhs():
    np.testing.assert_array_equal(build_augmented_rhs([5.0], 1), [0.0, 5.0])
    np.testing.assert_array_equal(build_augmented_rhs([1.0, 2.0], 3), [0, 0, 0, 1, 2])


@given(st.integers(1, 6), hnp.arrays(np.float64, st.integers(1, 8),
                                     elements=st.floats(-1e6, 1e6)))
def test_augmented_rhs_length(k, y):
    out = build_augmented_rhs(y, k)
    assert out.shape == (k + y.size,)
    assert not out[:k].any()


def test_noise_validation():
    np.testing.assert_array_equal(as_noise(0.5, 3), [0.5, 0.5, 0.5])
    np.testing.assert_array_equal(as_noise(0.0, 2), [0.0, 0.0])
    with pytest.raises(ValueError):
        as_noise([-0.1, 1.0], 2)
    with pytest.raises(ValueError):
        as_noise([1.0], 2)


def test_rejects_nonfinite():
    with pytest.raises(ValueError):
        SparseSymmetricMatrix(2, [1.0, np.nan], [], [], [])
    with pytest.raises(ValueError):
        SparseSymmetricMatrix(2, [1.0, 1.0], [0], [1], [np.inf])
    with pytest.raises(ValueError):
        build_augmented([[np.nan]], [1.0])


def test_rejects_duplicates_and_asymmetry():
    with pytest.raises(ValueError, match="duplicate"):
        SparseSymmetricMatrix(2, [1.0, 1.0], [0, 1], [1, 0], [0.5, 0.5])
    with pytest.raises(ValueError, match="symmetric"):
        SparseSymmetricMatrix.from_dense([[1.0, 2.0], [0.0, 1.0]])


def test_zero_diagonal_accepted_at_construction():
    A = SparseSymmetricMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
    assert A.num_directed_edges == 2


def test_triplets_and_get():
    A = SparseSymmetricMatrix.from_triplets(3, [(0, 0, 2.0), (1, 1, 3.0), (2, 0, -1.5), (2, 2, 1.0)])
    assert A.get(0, 2) == A.get(2, 0) == -1.5
    assert A.get(0, 1) == 0.0
    assert A.get(1, 1) == 3.0
    np.testing.assert_array_equal(A.neighbors(0), [2])
    np.testing.assert_array_equal(A.neighbors(1), [])


@given(symmetric_matrices())
def test_dense_round_trip_and_symmetry(a):
    A = SparseSymmetricMatrix.from_dense(a)
    np.testing.assert_array_equal(A.to_dense(), a)
    for e in range(A.num_directed_edges):
        i, j = A.src[e], A.dst[e]
        assert A.get(i, j) == A.get(j, i) == a[i, j]
        r = A.reverse[e]
        assert (A.src[r], A.dst[r]) == (j, i)
    x = np.arange(A.dim, dtype=float) - 1.5
    np.testing.assert_allclose(A.matvec(x), a @ x, atol=1e-12)


@settings(max_examples=60)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_dense_spreading_gives_2nk_slots(n, k, seed):
    S = np.random.default_rng(seed).choice([-1.0, 1.0], (n, k)) / np.sqrt(n)
    A = build_augmented(S, 1.0)
    assert A.nnz_pairs == n * k
    assert A.num_directed_edges == 2 * n * k
    np.testing.assert_array_equal(A.to_dense(), A.to_dense().T)


@settings(max_examples=60)
@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
                  elements=st.sampled_from([0.0, 0.0, 1.0, -2.5, 0.3])))
def test_sparse_spreading_gives_2z_slots(S):
    A = build_augmented(S, 1.0)
    assert A.num_directed_edges == 2 * np.count_nonzero(S)


def test_immutable():
    A = build_augmented(np.eye(2), 1.0)
    with pytest.raises(ValueError):
        A.diagonal[0] = 5.0
    with pytest.raises(Exception):
        A.dim = 3
