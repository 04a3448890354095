"""Dissimilarity-space embedding and the dataset-level graph.

Each image becomes the vector of its distances to a prototype set (by
default the whole collection, so the feature matrix is the distance matrix
itself). Images closer than tau get connected; the adjacency is then
symmetrically renormalized with self-loops for graph convolution.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .types import TEST, TRAIN, DatasetGraph, DistanceMatrix


def embed(dm: DistanceMatrix, prototype_ids: list[int]) -> np.ndarray:
    n = dm.n
    if not prototype_ids:
        raise ValueError("prototype set must be non-empty")
    if len(set(prototype_ids)) != len(prototype_ids):
        raise ValueError("duplicate prototype ids")
    for p in prototype_ids:
        if not (0 <= p < n):
            raise ValueError(f"prototype id {p} out of range 0..{n - 1}")
    return dm.values[:, prototype_ids].copy()


def build_adjacency(dm: DistanceMatrix, tau: float) -> sp.csr_matrix:
    if not (0.0 < tau <= 1.0):
        raise ValueError("tau must lie in (0,1]")
    mask = dm.values < tau
    np.fill_diagonal(mask, False)
    return sp.csr_matrix(mask.astype(np.float64))


def normalize_adjacency(A: sp.csr_matrix) -> sp.csr_matrix:
    """Symmetric renormalization with self-loops:
    A_hat(i,j) = (A+I)(i,j) / sqrt(d_i d_j) with d the degrees of A+I."""
    n = A.shape[0]
    if (A != A.T).nnz != 0:
        raise ValueError("adjacency must be symmetric")
    if A.diagonal().any():
        raise ValueError("adjacency diagonal must be zero")
    with_loops = (A + sp.identity(n, format="csr")).tocsr()
    deg = np.asarray(with_loops.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    D = sp.diags(inv_sqrt)
    return (D @ with_loops @ D).tocsr()


def assemble_dataset_graph(X: np.ndarray, A: sp.csr_matrix, A_hat: sp.csr_matrix,
                           labels: np.ndarray, split: np.ndarray) -> DatasetGraph:
    n = X.shape[0]
    if A.shape != (n, n) or A_hat.shape != (n, n):
        raise ValueError(
            f"dimension mismatch: X has {n} rows, A is {A.shape}, A_hat is {A_hat.shape}"
        )
    labels = np.asarray(labels, dtype=np.int64)
    split = np.asarray(split, dtype=np.int64)
    if labels.shape != (n,):
        raise ValueError(f"dimension mismatch: {n} feature rows vs {labels.shape[0]} labels")
    if split.shape != (n,):
        raise ValueError(f"dimension mismatch: {n} feature rows vs {split.shape[0]} split tags")
    if labels.min(initial=0) < 0:
        raise ValueError("every node needs a label")
    if not np.all(np.isin(split, (TRAIN, TEST))):
        raise ValueError("split tags must be train or test")
    g = DatasetGraph(A=A, A_hat=A_hat, X=np.asarray(X, dtype=np.float64),
                     Y=labels, split=split)
    g.compute_stats()
    return g


def standardize_rows(X: np.ndarray) -> np.ndarray:
    """Optional row-wise standardization of the feature matrix."""
    mu = X.mean(axis=1, keepdims=True)
    sd = X.std(axis=1, keepdims=True)
    sd[sd == 0.0] = 1.0
    return (X - mu) / sd
