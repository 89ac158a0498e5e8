"""Input validation helpers used at every public API boundary."""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError, NumericError, ShapeError


def as_float_array(values, name="array") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains NaN/Inf entries")
    return arr


def as_batch(values, dim=None, name="X") -> np.ndarray:
    """Coerce to a finite float64 batch of shape [n, d]."""
    arr = as_float_array(values, name)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D [n, d], got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ShapeError(f"{name} has {arr.shape[1]} columns, expected {dim}")
    return arr


def as_vector(values, dim=None, name="vector") -> np.ndarray:
    arr = as_float_array(values, name)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ShapeError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


def check_spd(cov, name="cov") -> np.ndarray:
    """Validate a symmetric positive-definite matrix (Cholesky must succeed)."""
    cov = as_float_array(cov, name)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, atol=1e-10):
        raise ConfigError(f"{name} is not symmetric")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ConfigError(f"{name} is not positive-definite") from None
    return cov


def check_weights(weights, n=None, name="weights") -> np.ndarray:
    """Validate a probability vector: nonnegative, sums to 1."""
    w = as_vector(weights, dim=n, name=name)
    if np.any(w < 0):
        raise ConfigError(f"{name} has negative entries")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ConfigError(f"{name} must sum to 1, got {w.sum()!r}")
    return w


def check_positive_int(value, name) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
