"""Input validation helpers shared by the estimators and statistics."""

from __future__ import annotations

from typing import Tuple

import numpy as np
from sklearn.utils.validation import check_array


def as_energies(X) -> np.ndarray:
    """Flatten eigenvalue input to a finite 1-D float array.

    Accepts an array, a sequence of arrays (one spectrum per realization) or
    objects exposing ``eigenvalues``.
    """
    if hasattr(X, "eigenvalues"):
        X = X.eigenvalues
    elif isinstance(X, (list, tuple)) and X and (hasattr(X[0], "eigenvalues") or np.ndim(X[0]) >= 1):
        X = np.concatenate([np.ravel(getattr(x, "eigenvalues", x)) for x in X])
    arr = np.ravel(np.asarray(X, dtype=np.float64))
    arr = check_array(arr.reshape(-1, 1), ensure_min_samples=0, ensure_all_finite=True)
    return arr.ravel()


def check_interval(interval, name: str = "interval", allow_empty: bool = True) -> Tuple[float, float]:
    try:
        a, b = (float(v) for v in interval)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a pair (lo, hi), got {interval!r}") from None
    if np.isnan(a) or np.isnan(b):
        raise ValueError(f"{name} has NaN endpoints")
    if b < a and not allow_empty:
        raise ValueError(f"{name} is empty: ({a}, {b})")
    return a, b


def check_disjoint(intervals) -> None:
    """Raise if any two half-open intervals overlap."""
    iv = sorted(check_interval(i) for i in intervals)
    for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
        if a1 < b0:
            raise ValueError(f"intervals ({a0}, {b0}) and ({a1}, {b1}) overlap")
