"""Input validation helpers for the estimator-facing API.

Kept deliberately small: 2-d float feature matrices, integer class
labels, and scalar ranges. Estimators call these at their public
boundaries so downstream numerics can assume clean inputs.
"""

import numpy as np

from .errors import DataError


def check_feature_matrix(X, n_features=None):
    """Coerce X to a finite 2-d float64 array, optionally of fixed width."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d feature matrix, got ndim={X.ndim}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"feature length mismatch: expected {n_features}, got {X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise DataError("feature matrix contains NaN or Inf")
    return X


def check_labels(y, n_samples=None):
    """Coerce labels to a 1-d int array (SentimentLabel is an IntEnum)."""
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1:
        raise ValueError(f"expected 1-d labels, got ndim={y.ndim}")
    if n_samples is not None and y.shape[0] != n_samples:
        raise ValueError(
            f"labels/features length mismatch: {y.shape[0]} vs {n_samples}"
        )
    return y


def check_threshold(t):
    """Validate a neutral-band threshold, strictly inside (0, 1)."""
    t = float(t)
    if not 0.0 < t < 1.0:
        raise DataError(f"threshold must be in (0, 1), got {t}")
    return t


def check_positive_int(value, name, minimum=1):
    value = int(value)
    if value < minimum:
        raise DataError(f"{name} must be >= {minimum}, got {value}")
    return value
