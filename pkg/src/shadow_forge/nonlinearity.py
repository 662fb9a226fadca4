"""Lipschitz perturbations ``f_n(x)`` and ``f(t, x)``.

Both classes store a vectorized callable: given an array of indices (or
times) of shape ``(K,)`` and states ``(K, dim)`` it returns ``(K, dim)``.
Use :meth:`pointwise` to wrap a function of a single ``(n, x)`` pair.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from ._validation import check_random_state
from .certificate import Check, holds, safe_ratio
from .norms import EuclideanNorm


class _Perturbation:
    def __init__(self, fn: Callable, lipschitz_c: float, name: str = ""):
        if not lipschitz_c >= 0:
            raise ValueError(f"Lipschitz constant must be >= 0, got {lipschitz_c}")
        self.fn = fn
        self.lipschitz_c = float(lipschitz_c)
        self.name = name

    @classmethod
    def pointwise(cls, f: Callable, lipschitz_c: float, name: str = ""):
        def fn(idx, X):
            return np.array([np.asarray(f(i, x), dtype=float).reshape(-1)
                             for i, x in zip(idx, X)]).reshape(np.shape(X))
        return cls(fn, lipschitz_c, name)

    @classmethod
    def zero(cls):
        return cls(lambda idx, X: np.zeros_like(np.asarray(X, dtype=float)), 0.0, "zero")

    def batch(self, idx, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.asarray(self.fn(np.asarray(idx, dtype=float), X), dtype=float).reshape(X.shape)

    def __call__(self, i, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.batch(np.array([i]), x.reshape(1, -1))[0].reshape(x.shape)

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"

    def _sampled_check(self, idx, weights, dim, samples, scale, seed, norm):
        rng = check_random_state(seed)
        norm = norm or EuclideanNorm()
        k = rng.integers(0, len(idx), samples)
        X = rng.normal(size=(samples, dim)) * scale
        Y = X + rng.normal(size=(samples, dim)) * scale * rng.uniform(1e-3, 1.0, (samples, 1))
        lhs = norm.vecs(self.batch(idx[k], X) - self.batch(idx[k], Y))
        rhs = self.lipschitz_c * weights[k] * norm.vecs(X - Y)
        ratios = safe_ratio(lhs, rhs)
        j = int(np.argmax(ratios))
        return Check("Lipschitz bound", float(ratios[j]),
                     bool(np.all(holds(lhs, rhs))), float(idx[k[j]]),
                     f"{samples} random pairs")


class Nonlinearity(_Perturbation):
    """Discrete perturbation ``f_n`` with Lipschitz constant ``c`` times the step weight."""

    def check_lipschitz(self, weights, dim: int, samples: int = 500, scale: float = 1.0,
                        seed=0, norm=None) -> Check:
        """Sampled ``|f_n(x) - f_n(y)| <= c w_n |x - y|`` for the given weights ``w_n``."""
        weights = np.asarray(weights, dtype=float)
        return self._sampled_check(np.arange(weights.size, dtype=float), weights, dim,
                                   samples, scale, seed, norm)


class ContinuousNonlinearity(_Perturbation):
    """Continuous perturbation ``f(t, x)`` with Lipschitz constant ``c mu'/(mu nu^d)``."""

    def check_lipschitz(self, rate, d: float, dim: int, grid, samples: int = 500,
                        scale: float = 1.0, seed=0, norm=None) -> Check:
        grid = np.asarray(grid, dtype=float)
        weights = np.asarray(rate.defect_weight(grid, d), dtype=float) * np.ones_like(grid)
        return self._sampled_check(grid, weights, dim, samples, scale, seed, norm)


def _sine_profile(X):
    X = np.asarray(X, dtype=float)
    r = np.linalg.norm(X, axis=-1, keepdims=True)
    return np.sin(r) * np.ones_like(X) / np.sqrt(X.shape[-1])


def sine_nonlinearity(c: float, weights) -> Nonlinearity:
    """``f_n(x) = c w_n sin(|x|) (1, ..., 1)/sqrt(dim)``; Lipschitz constant exactly ``c w_n``.

    ``weights`` is an array indexed by ``n`` or a callable on index arrays.
    """
    if callable(weights):
        wfun = weights
    else:
        w = np.asarray(weights, dtype=float)
        wfun = lambda idx: w[idx]

    def fn(idx, X):
        idx = np.asarray(idx, dtype=int)
        return c * (np.asarray(wfun(idx), dtype=float) * np.ones(idx.shape))[:, None] * _sine_profile(X)
    return Nonlinearity(fn, c, f"sine(c={c:g})")


def sine_nonlinearity_continuous(c: float, weight: Callable) -> ContinuousNonlinearity:
    """``f(t, x) = c weight(t) sin(|x|) (1, ..., 1)/sqrt(dim)``."""
    def fn(t, X):
        t = np.asarray(t, dtype=float)
        return c * (np.asarray(weight(t), dtype=float) * np.ones_like(t))[:, None] * _sine_profile(X)
    return ContinuousNonlinearity(fn, c, f"sine(c={c:g})")
