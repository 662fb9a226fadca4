"""Input validation helpers shared by the public entry points."""
from __future__ import annotations

import numpy as np

from .exceptions import ShapeMismatch


def check_matrix_stack(M, name: str = "matrices", square: bool = True) -> np.ndarray:
    """Coerce to a finite float array of shape ``(n, dim, dim)``."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 2:
        M = M[None]
    if M.ndim != 3:
        raise ShapeMismatch(f"{name} must be a stack of matrices, got shape {M.shape}")
    if square and M.shape[1] != M.shape[2]:
        raise ShapeMismatch(f"{name} must be square, got {M.shape[1:]}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return np.array(M)


def check_trajectory(Y, length: int | None = None, dim: int | None = None,
                     name: str = "trajectory") -> np.ndarray:
    """Coerce to ``(length, dim)``; scalar systems may pass a 1-d array."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-d (time, state), got shape {Y.shape}")
    if length is not None and Y.shape[0] != length:
        raise ShapeMismatch(f"{name} must have {length} rows, got {Y.shape[0]}")
    if dim is not None and Y.shape[1] != dim:
        raise ShapeMismatch(f"{name} must have state dimension {dim}, got {Y.shape[1]}")
    if not np.all(np.isfinite(Y)):
        raise ValueError(f"{name} contains non-finite entries")
    return Y


def check_grid(t, name: str = "grid") -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ShapeMismatch(f"{name} must be a 1-d array with at least two points")
    if np.any(np.diff(t) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if t[0] < 0:
        raise ValueError(f"{name} must lie in [0, inf)")
    return t


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
