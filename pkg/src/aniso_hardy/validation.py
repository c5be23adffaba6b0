"""Input validation shared by the estimators and the command line."""

from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import PreconditionError


def check_matrix(matrix) -> np.ndarray:
    """Square, finite, float matrix with ``n >= 1`` (scalars become 1x1)."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {a.shape}")
    return check_array(a, ensure_all_finite=True, ensure_min_samples=1)


def check_points(X, n: int) -> np.ndarray:
    """Rows of points in R^n; a 1D array is read as one point (or as samples when n = 1)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if n == 1 else X[None, :]
    X = check_array(X, ensure_all_finite=True)
    if X.shape[1] != n:
        raise PreconditionError(f"expected {n} columns, got {X.shape[1]}")
    return X


def check_epsilon(epsilon) -> float:
    e = float(epsilon)
    if not 0.0 < e < 0.5:
        raise PreconditionError("epsilon must lie in (0, 0.5)")
    return e


def check_q(q, p_plus: float) -> float:
    q = math.inf if q in ("inf", "infinity") else float(q)
    if not q > max(p_plus, 1.0):
        raise PreconditionError(f"q must exceed max(p_+, 1) = {max(p_plus, 1.0):g}")
    return q


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or int(value) != value or int(value) < minimum:
        raise PreconditionError(f"{name} must be an integer >= {minimum}")
    return int(value)


def check_interval(pair, name: str) -> tuple[int, int]:
    lo, hi = (int(v) for v in pair)
    if lo > hi:
        raise PreconditionError(f"{name} must satisfy lo <= hi")
    return lo, hi
