"""Small input-validation helpers shared by the estimator API."""

from __future__ import annotations

import numpy as np


def as_float_array(x, name: str = "x", last_dim: int | None = None) -> np.ndarray:
    """Coerce to a float64 array, requiring finite entries and, when
    given, a specific trailing dimension."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if last_dim is not None and (arr.ndim == 0 or arr.shape[-1] != last_dim):
        raise ValueError(f"{name} must have trailing dimension {last_dim}, got shape {arr.shape}")
    return arr


def check_positive(value, name: str):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value
