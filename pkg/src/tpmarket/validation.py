"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

__all__ = ["check_ap_matrix", "check_ap_weights", "check_menu"]


def check_ap_matrix(X) -> tuple[np.ndarray, np.ndarray]:
    """Split an ``(n, 2)`` matrix of ``(beta, v)`` rows into two arrays.

    Sensitivities must be non-negative; revenues may be any finite value.
    """
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns (beta, v), got {X.shape[1]}")
    beta, v = X[:, 0].copy(), X[:, 1].copy()
    if np.any(beta < 0):
        raise ValueError("beta column must be non-negative")
    return beta, v


def check_ap_weights(sample_weight, n: int) -> np.ndarray:
    """Traffic ceilings ``alpha``; unit weights when ``None``."""
    if sample_weight is None:
        return np.ones(n)
    w = check_array(sample_weight, dtype=np.float64, ensure_2d=False, ensure_all_finite=True)
    if w.ndim != 1 or len(w) != n:
        raise ValueError(f"sample_weight must be a vector of length {n}")
    if np.any(w <= 0):
        raise ValueError("sample_weight (alpha) must be positive")
    return w


def check_menu(qualities, values, name: str, allow_zero: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Aligned, finite quality and per-segment value vectors."""
    q = np.atleast_1d(np.asarray(qualities, dtype=float))
    x = np.atleast_1d(np.asarray(values, dtype=float))
    if q.ndim != 1 or q.shape != x.shape:
        raise ValueError(f"qualities and {name} must be 1-d and the same length")
    if not np.all(np.isfinite(q)) or np.any(q <= 0):
        raise ValueError("qualities must be positive and finite")
    if not np.all(np.isfinite(x)) or np.any(x < 0) or (not allow_zero and np.any(x == 0)):
        raise ValueError(f"{name} must be finite and non-negative")
    return q, x
