"""Input validation helpers for the estimator-facing surfaces."""

from __future__ import annotations

import numpy as np


def check_point_matrix(X, name: str = "X", dim: int | None = None, allow_empty: bool = False) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2d array, got shape {X.shape}")
    if not allow_empty and X.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one row")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"{name} has {X.shape[1]} columns, expected {dim}")
    return X


def check_weights(w, n: int, name: str = "sample_weight") -> np.ndarray:
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != n:
        raise ValueError(f"{name} has length {w.shape[0]}, expected {n}")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{name} contains non-finite values")
    if np.any(w < 0):
        raise ValueError(f"{name} contains negative entries")
    if w.sum() <= 0:
        raise ValueError(f"{name} must have positive total mass")
    return w


def check_binary_labels(y, n: int, name: str = "y") -> np.ndarray:
    y = np.asarray(y).ravel()
    if y.shape[0] != n:
        raise ValueError(f"{name} has length {y.shape[0]}, expected {n}")
    vals = np.unique(y)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError(f"{name} must be binary 0/1, got values {vals!r}")
    return y.astype(np.float64)


def check_seed(seed) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    return int(seed)
