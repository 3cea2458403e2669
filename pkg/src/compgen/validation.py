"""Input-validation helpers shared across the toolkit's numeric surfaces."""

from __future__ import annotations

import numpy as np


def as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_positive_vector(values, name: str) -> np.ndarray:
    arr = as_float_vector(values, name)
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if np.any(arr <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return arr


def check_binary_labels(values, name: str = "y") -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    uniq = np.unique(arr)
    if not np.all(np.isin(uniq, (0, 1))):
        raise ValueError(f"{name} must contain only 0/1 values")
    return arr.astype(np.int64)


def check_outcome_pairs(outcomes) -> tuple[np.ndarray, np.ndarray]:
    """Split an iterable of (y, f_avg) pairs into validated arrays."""
    pairs = list(outcomes)
    if not pairs:
        raise ValueError("outcomes is empty")
    y = check_binary_labels([p[0] for p in pairs])
    f_avg = check_positive_vector([p[1] for p in pairs], "f_avg")
    return y, f_avg
