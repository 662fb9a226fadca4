"""Vector and operator norms on the state space.

Everything in the package measures states through one of these objects, so
the companion (product-space) systems can reuse the first-order machinery
unchanged.
"""
from __future__ import annotations

import numpy as np


class EuclideanNorm:
    """Euclidean vector norm with the induced spectral operator norm."""

    name = "euclidean"

    def vec(self, x) -> float:
        return float(np.linalg.norm(x))

    def vecs(self, X) -> np.ndarray:
        """Row-wise norms of a stack of vectors (last axis is the state)."""
        return np.linalg.norm(X, axis=-1)

    def op(self, M) -> float:
        return float(np.linalg.norm(M, 2))

    def ops(self, Ms) -> np.ndarray:
        if Ms.shape[-1] == 1 and Ms.shape[-2] == 1:
            return np.abs(Ms[..., 0, 0])
        return np.linalg.norm(Ms, ord=2, axis=(-2, -1))

    def __repr__(self):
        return "EuclideanNorm()"


class ProductNorm:
    """``|(x1, x2)|' = |x1| + |x2|`` on ``X x X`` with ``X = R^block``.

    The operator norm returned by :meth:`op` is the exact induced norm when
    ``block == 1`` and the upper bound ``max_j sum_i ||M_ij||_2`` otherwise,
    which keeps every certificate built on it sound.
    """

    name = "product"

    def __init__(self, block: int):
        if block < 1:
            raise ValueError("block size must be positive")
        self.block = int(block)

    def _split(self, X):
        k = self.block
        return X[..., :k], X[..., k:]

    def vec(self, x) -> float:
        a, b = self._split(np.asarray(x, dtype=float))
        return float(np.linalg.norm(a) + np.linalg.norm(b))

    def vecs(self, X) -> np.ndarray:
        a, b = self._split(np.asarray(X, dtype=float))
        return np.linalg.norm(a, axis=-1) + np.linalg.norm(b, axis=-1)

    def _block_norms(self, Ms):
        k = self.block
        Ms = np.asarray(Ms, dtype=float)
        if k == 1:
            return np.abs(Ms)
        out = np.empty(Ms.shape[:-2] + (2, 2))
        for i in range(2):
            for j in range(2):
                blk = Ms[..., i * k:(i + 1) * k, j * k:(j + 1) * k]
                out[..., i, j] = np.linalg.norm(blk, ord=2, axis=(-2, -1))
        return out

    def op(self, M) -> float:
        return float(self.ops(np.asarray(M, dtype=float)[None])[0])

    def ops(self, Ms) -> np.ndarray:
        blocks = self._block_norms(Ms)
        return blocks.sum(axis=-2).max(axis=-1)

    def __repr__(self):
        return f"ProductNorm(block={self.block})"


def get_norm(spec) -> EuclideanNorm | ProductNorm:
    if spec is None or spec == "euclidean":
        return EuclideanNorm()
    if isinstance(spec, (EuclideanNorm, ProductNorm)):
        return spec
    if isinstance(spec, dict) and spec.get("kind") == "product":
        return ProductNorm(int(spec["block"]))
    raise ValueError(f"unknown norm spec {spec!r}")
