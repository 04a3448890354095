import numpy as np
import pytest
import scipy.sparse as sp

from grembed_fastgcn.embedding import (
    assemble_dataset_graph,
    build_adjacency,
    embed,
    normalize_adjacency,
    standardize_rows,
)
from grembed_fastgcn.types import TEST, TRAIN, DistanceMatrix


def _random_dm(rng, n):
    v = rng.random((n, n))
    v = (v + v.T) / 2.0
    np.fill_diagonal(v, 0.0)
    return DistanceMatrix(names=tuple(f"g{i}" for i in range(n)), values=v)


def test_embed_all_prototypes_is_the_matrix():
    rng = np.random.default_rng(50)
    dm = _random_dm(rng, 7)
    X = embed(dm, list(range(7)))
    assert np.array_equal(X, dm.values)
    # each object is at distance zero from itself
    assert (np.diag(X) == 0.0).all()


def test_embed_subset_selects_columns():
    rng = np.random.default_rng(51)
    dm = _random_dm(rng, 6)
    X = embed(dm, [4, 1])
    assert X.shape == (6, 2)
    assert np.array_equal(X[:, 0], dm.values[:, 4])
    assert np.array_equal(X[:, 1], dm.values[:, 1])


def test_embed_rejects_bad_prototypes():
    rng = np.random.default_rng(52)
    dm = _random_dm(rng, 4)
    with pytest.raises(ValueError):
        embed(dm, [])
    with pytest.raises(ValueError):
        embed(dm, [0, 0])
    with pytest.raises(ValueError):
        embed(dm, [5])


def test_adjacency_brute_force_oracle():
    rng = np.random.default_rng(53)
    for trial in range(20):
        n = int(rng.integers(2, 30))
        dm = _random_dm(rng, n)
        tau = float(rng.uniform(0.05, 0.9))
        A = build_adjacency(dm, tau).toarray()
        for i in range(n):
            for j in range(n):
                expected = 1.0 if i != j and dm.values[i, j] < tau else 0.0
                assert A[i, j] == expected


def test_adjacency_monotone_in_tau():
    rng = np.random.default_rng(54)
    dm = _random_dm(rng, 20)
    prev = 0
    for tau in (0.1, 0.3, 0.5, 0.9):
        nnz = build_adjacency(dm, tau).nnz
        assert nnz >= prev
        prev = nnz


def test_normalization_two_node_hand_case():
    # two connected nodes: A+I is all-ones, degrees are 2,
    # so every entry becomes 1/2
    A = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    got = normalize_adjacency(A).toarray()
    assert np.allclose(got, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def test_normalization_isolated_node():
    # an isolated node has self-loop degree 1 and keeps weight 1 on itself
    A = sp.csr_matrix((3, 3))
    got = normalize_adjacency(A).toarray()
    assert np.allclose(got, np.eye(3), atol=1e-15)


def test_normalization_dense_oracle():
    rng = np.random.default_rng(55)
    for _ in range(10):
        n = int(rng.integers(2, 40))
        A = (rng.random((n, n)) < 0.3).astype(float)
        A = np.triu(A, 1)
        A = A + A.T
        A_tilde = A + np.eye(n)
        d = A_tilde.sum(axis=1)
        expected = A_tilde / np.sqrt(np.outer(d, d))
        got = normalize_adjacency(sp.csr_matrix(A)).toarray()
        assert np.max(np.abs(got - expected)) < 1e-12


def test_normalization_rejects_asymmetry_and_self_loops():
    bad = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        normalize_adjacency(bad)
    loop = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        normalize_adjacency(loop)


def test_assemble_dataset_graph():
    rng = np.random.default_rng(56)
    dm = _random_dm(rng, 8)
    X = embed(dm, list(range(8)))
    A = build_adjacency(dm, 0.5)
    A_hat = normalize_adjacency(A)
    labels = np.array([0, 0, 1, 1, 0, 1, 0, 1])
    split = np.array([TRAIN] * 4 + [TEST] * 4)
    g = assemble_dataset_graph(X, A, A_hat, labels, split)
    assert g.X.shape == (8, 8)
    assert g.stats["n_nodes"] == 8
    assert g.stats["n_edges"] == A.nnz // 2
    with pytest.raises(ValueError):
        assemble_dataset_graph(X[:5], A, A_hat, labels, split)
    with pytest.raises(ValueError):
        assemble_dataset_graph(X, A, A_hat, labels, np.full(8, 9))


def test_standardize_rows():
    rng = np.random.default_rng(57)
    X = rng.random((5, 9)) * 3.0 + 1.0
    Z = standardize_rows(X)
    assert np.allclose(Z.mean(axis=1), 0.0, atol=1e-12)
    assert np.allclose(Z.std(axis=1), 1.0, atol=1e-12)
    # a constant row is left at zero instead of dividing by zero
    C = standardize_rows(np.full((2, 4), 3.0))
    assert np.array_equal(C, np.zeros((2, 4)))
