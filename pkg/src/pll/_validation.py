"""Input validation helpers shared by the estimators and functional API."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .errors import DomainError


def check_sample_1d(X, name="X"):
    """Return ``X`` as a finite 1-d float array; ``(n, 1)`` columns are flattened."""
    arr = check_array(X, ensure_2d=False, dtype=float, input_name=name, ensure_min_samples=0)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise DomainError(f"{name} must be one-dimensional, got shape {arr.shape}")
        arr = arr[:, 0]
    return arr


def check_points(X, d=None, name="X"):
    arr = check_array(X, dtype=float, input_name=name, ensure_min_samples=0)
    if d is not None and arr.shape[1] != d:
        raise DomainError(f"{name} must have {d} columns, got {arr.shape[1]}")
    return arr


def check_probability(p, name="p", open_interval=False):
    p = float(p)
    ok = 0.0 < p < 1.0 if open_interval else 0.0 <= p <= 1.0
    if not ok:
        bounds = "(0, 1)" if open_interval else "[0, 1]"
        raise DomainError(f"{name} must lie in {bounds}, got {p}", key=name)
    return p


def check_count(n, name="n", minimum=0):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        else:
            raise DomainError(f"{name} must be an integer, got {n!r}", key=name)
    n = int(n)
    if n < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {n}", key=name)
    return n


def as_vector(x, name="x"):
    return np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
