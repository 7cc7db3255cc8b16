"""Shared pieces for the model families: input checks and link functions."""

from __future__ import annotations

import numpy as np

from ..errors import DataError

CLASSES = np.array([False, True])


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign to stay finite for large |z|.
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def check_train_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2:
        raise DataError(f"X must be 2-dimensional, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise DataError(f"y length {y.shape} does not match {X.shape[0]} rows")
    if np.isnan(X).any():
        raise DataError("X contains NaN values")
    y = y.astype(bool).astype(float)
    if y.min() == y.max():
        raise DataError("training labels contain a single class")
    return X, y


def check_predict_data(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise DataError(f"X has shape {X.shape}, expected (*, {n_features})")
    return X


def proba_matrix(p_pos: np.ndarray) -> np.ndarray:
    """sklearn-style (n, 2) probability matrix for classes [False, True]."""
    return np.column_stack([1.0 - p_pos, p_pos])
