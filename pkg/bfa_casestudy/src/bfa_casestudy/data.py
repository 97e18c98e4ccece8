"""Synthetic classification task and a small float reference network."""

from __future__ import annotations

import numpy as np


def make_dataset(seed: int = 0, n_per_class: int = 200, n_features: int = 16,
                 n_classes: int = 4, test_fraction: float = 0.25):
    """Well separated Gaussian clusters, split into train and test."""
    rng = np.random.default_rng(seed)
    means = rng.normal(scale=2.5, size=(n_classes, n_features))
    X = np.concatenate([
        means[c] + rng.normal(scale=1.0, size=(n_per_class, n_features))
        for c in range(n_classes)])
    y = np.repeat(np.arange(n_classes), n_per_class)
    order = rng.permutation(len(y))
    X, y = X[order], y[order]
    n_test = int(len(y) * test_fraction)
    return X[n_test:], y[n_test:], X[:n_test], y[:n_test]


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def train_float_mlp(X: np.ndarray, y: np.ndarray, hidden: int = 24,
                    epochs: int = 300, lr: float = 0.5, seed: int = 0):
    """Full-batch gradient descent on a two layer ReLU classifier.

    Returns ([W1, W2], [b1, b2]) with W of shape (out, in).
    """
    rng = np.random.default_rng(seed)
    n, d = X.shape
    classes = int(y.max()) + 1
    W1 = rng.normal(scale=1 / np.sqrt(d), size=(hidden, d))
    b1 = np.zeros(hidden)
    W2 = rng.normal(scale=1 / np.sqrt(hidden), size=(classes, hidden))
    b2 = np.zeros(classes)
    onehot = np.eye(classes)[y]
    for _ in range(epochs):
        z1 = X @ W1.T + b1
        a1 = np.maximum(z1, 0.0)
        p = _softmax(a1 @ W2.T + b2)
        dz2 = (p - onehot) / n
        dW2 = dz2.T @ a1
        db2 = dz2.sum(axis=0)
        dz1 = (dz2 @ W2) * (z1 > 0)
        dW1 = dz1.T @ X
        db1 = dz1.sum(axis=0)
        W1 -= lr * dW1
        b1 -= lr * db1
        W2 -= lr * dW2
        b2 -= lr * db2
    return [W1, W2], [b1, b2]
