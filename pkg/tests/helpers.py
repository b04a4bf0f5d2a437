"""Synthetic datasets and small utilities shared across the test suite."""

from __future__ import annotations

import numpy as np

from assetsvm import Dataset, SparseVector, format_libsvm


def dense_vector(values) -> SparseVector:
    values = np.asarray(values, dtype=np.float64)
    return SparseVector(np.arange(values.size, dtype=np.int64), values)


def matrix_dataset(X: np.ndarray, labels: np.ndarray, task: str) -> Dataset:
    examples = tuple(dense_vector(row) for row in X)
    return Dataset(examples, np.asarray(labels, dtype=np.float64), X.shape[1], task)


def planted_dataset(m: int, n: int, seed: int) -> Dataset:
    """Gaussian points labeled by a random hyperplane through the origin."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(m, n))
    w = rng.normal(size=n)
    y = np.where(X @ w >= 0.0, 1.0, -1.0)
    return matrix_dataset(X, y, "classification")


def two_moons(m: int, seed: int, noise: float = 0.2) -> Dataset:
    """Two interleaved half-circles with Gaussian coordinate noise."""
    rng = np.random.default_rng(seed)
    half = m // 2
    t_up = rng.uniform(0.0, np.pi, size=half)
    t_dn = rng.uniform(0.0, np.pi, size=m - half)
    upper = np.column_stack([np.cos(t_up), np.sin(t_up)])
    lower = np.column_stack([1.0 - np.cos(t_dn), 0.5 - np.sin(t_dn)])
    X = np.vstack([upper, lower]) + rng.normal(scale=noise, size=(m, 2))
    y = np.concatenate([np.ones(half), -np.ones(m - half)])
    order = rng.permutation(m)
    return matrix_dataset(X[order], y[order], "classification")


def sinusoid_dataset(m: int, seed: int, noise: float = 0.0) -> Dataset:
    """1-d regression: y = sin(2*pi*x) on [0, 1), optionally noisy."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=m)
    y = np.sin(2.0 * np.pi * x)
    if noise:
        y = y + rng.normal(scale=noise, size=m)
    X = x[:, np.newaxis]
    return matrix_dataset(X, y, "regression")


def write_libsvm(path, data: Dataset) -> str:
    path = str(path)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_libsvm(data))
    return path
