"""Shared test utilities: dataset builders for synthetic instances."""

import numpy as np

from acfcd.data import SparseDataset, SparseVector


def dataset_from_dense(X, labels, class_values=None):
    """Wrap a dense matrix as a SparseDataset (zeros dropped)."""
    X = np.asarray(X, dtype=np.float64)
    rows = []
    for r in X:
        idx = np.nonzero(r)[0]
        rows.append(SparseVector(idx, r[idx]))
    return SparseDataset(rows, labels, X.shape[1], class_values=class_values)


def binary_dataset_from_dense(X, y_pm1):
    """Dense matrix + labels in {-1, +1} -> classification dataset."""
    y = np.asarray(y_pm1)
    ids = ((y + 1) // 2).astype(np.int64)
    return dataset_from_dense(X, ids, class_values=[-1.0, 1.0])


def multiclass_dataset_from_dense(X, class_ids, K):
    return dataset_from_dense(
        X, np.asarray(class_ids, dtype=np.int64), class_values=np.arange(K, dtype=float)
    )


def random_regression_instance(rng, n_examples, n_features, density=0.7):
    X = rng.standard_normal((n_examples, n_features))
    X *= rng.random((n_examples, n_features)) < density
    y = rng.standard_normal(n_examples)
    return X, y


def random_binary_instance(rng, n_examples, n_features, density=0.7):
    X = rng.standard_normal((n_examples, n_features))
    X *= rng.random((n_examples, n_features)) < density
    # ensure no all-zero rows so every example is a live dual variable
    for i in range(n_examples):
        if not X[i].any():
            X[i, rng.integers(n_features)] = 1.0
    y = np.where(rng.random(n_examples) < 0.5, -1.0, 1.0)
    return X, y


def random_multiclass_instance(rng, n_examples, n_features, K, density=0.7):
    X = rng.standard_normal((n_examples, n_features))
    X *= rng.random((n_examples, n_features)) < density
    for i in range(n_examples):
        if not X[i].any():
            X[i, rng.integers(n_features)] = 1.0
    ids = rng.integers(0, K, n_examples)
    # make sure every class appears
    ids[:K] = np.arange(K)
    return X, ids


def random_spd_matrix(rng, n):
    """Well-conditioned random symmetric positive definite matrix."""
    A = rng.standard_normal((n, n + 3))
    Q = A @ A.T / (n + 3) + 0.1 * np.eye(n)
    return 0.5 * (Q + Q.T)
