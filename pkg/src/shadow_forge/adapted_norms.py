"""Time-indexed (Lyapunov) norms built from a dichotomy.

On the stable fiber ``|x|_n = sup_{m >= n} |A(m, n) x| (mu_m/mu_n)^lam``, on
the unstable fiber the sup runs backwards over ``m <= n`` with the unstable
pullback, and on the center fiber the raw norm is scaled by a closed-form
weight.  The adapted norm of a general vector is the sum over the three
projections.  Suprema are taken over the finite window and truncated by a
decay rule; the truncation bound is reported with every value.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._chain import HORIZON_RTOL, NodeChain
from ._validation import check_random_state
from .certificate import Certificate
from .exceptions import FiberMismatch, IndexOutOfRange
from .linear_continuous import build_chain_continuous, default_cert_grid
from .linear_discrete import DichotomyConstants, build_chain

FIBERS = ("stable", "unstable", "center")
FIBER_TOL = 1e-8
MAX_NORM_NODES = 512


class NormValue(NamedTuple):
    value: float
    tail_bound: float
    approximate: bool

    def __float__(self):
        return float(self.value)


class AdaptedNorm:
    """Adapted norm on the nodes of a chain.

    ``boost`` multiplies the truncation rule (pass the certified worst ratio
    when it exceeds one); ``sup_horizon`` caps the number of steps in the
    stable and unstable suprema.
    """

    def __init__(self, chain: NodeChain, constants: DichotomyConstants,
                 boost: float = 1.0, sup_horizon: int | None = None):
        self.chain = chain
        self.constants = constants
        self.boost = max(float(boost), 1.0)
        self.sup_horizon = sup_horizon

    @classmethod
    def discrete(cls, cocycle, projections, rates, constants, norm=None, **kw):
        chain = build_chain(cocycle, projections, rates, lam=constants.lam, norm=norm)
        return cls(chain, constants, **kw)

    @classmethod
    def continuous(cls, family, projections, rate, constants, grid=None, norm=None, **kw):
        if grid is None:
            grid = default_cert_grid(rate, min(family.t_max, 20.0))
        chain = build_chain_continuous(family, projections, rate, grid, norm)
        return cls(chain, constants, **kw)

    @property
    def size(self) -> int:
        return self.chain.size

    def center_weight(self, n=None):
        w = self.chain.center_w
        return w if n is None else w[n]

    def _idx(self, n):
        n = int(n)
        if not 0 <= n < self.size:
            raise IndexOutOfRange(f"node {n} outside [0, {self.size - 1}]")
        return n

    def component(self, x, n: int, fiber: str) -> NormValue:
        """Norm of ``x`` on one fiber at node ``n``; ``x`` must lie in that fiber."""
        if fiber not in FIBERS:
            raise ValueError(f"fiber must be one of {FIBERS}")
        n = self._idx(n)
        x = np.asarray(x, dtype=float).reshape(-1)
        i = FIBERS.index(fiber)
        P = self.chain.P[i, n]
        raw = self.chain.norm.vec(x)
        if np.linalg.norm(x - P @ x) > FIBER_TOL * max(np.linalg.norm(x), 1e-300):
            raise FiberMismatch(f"vector is not in the {fiber} fiber at node {n}")
        if raw == 0.0:
            return NormValue(0.0, 0.0, False)
        if fiber == "center":
            return NormValue(float(self.chain.center_w[n] * raw), 0.0, False)
        sup = self.chain.stable_sup if fiber == "stable" else self.chain.unstable_sup
        val, tail = sup(x[None], np.array([n]), self.constants.lam, self.constants,
                        self.boost, self.sup_horizon)
        return NormValue(float(val[0]), float(tail[0]),
                         bool(tail[0] > HORIZON_RTOL * val[0]))

    def evaluate(self, Z, idx=None):
        """Adapted norms of ``Z[k]`` at nodes ``idx[k]`` (all nodes by default).

        Returns ``(values, tail_bounds)``.
        """
        chain = self.chain
        idx = np.arange(chain.size) if idx is None else np.asarray(idx, dtype=int)
        Z = np.asarray(Z, dtype=float).reshape(idx.size, chain.dim)
        k = self.constants
        X1 = chain.project(1, Z, idx)
        X2 = chain.project(2, Z, idx)
        X3 = chain.project(3, Z, idx)
        v1, t1 = chain.stable_sup(X1, idx, k.lam, k, self.boost, self.sup_horizon)
        v2, t2 = chain.unstable_sup(X2, idx, k.lam, k, self.boost, self.sup_horizon)
        v3 = chain.center_w[idx] * chain.norm.vecs(X3)
        return v1 + v2 + v3, t1 + t2

    def __call__(self, x, n: int) -> float:
        n = self._idx(n)
        return float(self.evaluate(np.asarray(x, dtype=float)[None], np.array([n]))[0][0])

    def sample_nodes(self, max_nodes: int = MAX_NORM_NODES) -> np.ndarray:
        if self.size <= max_nodes:
            return np.arange(self.size)
        return np.unique(np.linspace(0, self.size - 1, max_nodes).round().astype(int))

    def sup(self, Z, idx=None) -> NormValue:
        """``sup_n |Z_n|_n`` over the given nodes (all nodes by default)."""
        Z = np.asarray(Z, dtype=float)
        if idx is None:
            idx = np.arange(self.size)
        else:
            Z = Z[idx]
        vals, tails = self.evaluate(Z, idx)
        j = int(np.argmax(vals))
        approx = bool(np.any(tails > HORIZON_RTOL * np.maximum(vals, 1e-300)))
        return NormValue(float(vals[j]), float(tails.max()), approx)


def adapted_norm(norm: AdaptedNorm, x, n: int) -> float:
    """Sum of the three fiber norms of the projections of ``x`` at node ``n``."""
    return norm(x, n)


def norm_component(norm: AdaptedNorm, x, n: int, fiber: str) -> NormValue:
    return norm.component(x, n, fiber)


def _propagate(chain: NodeChain, x, m: int, n: int):
    """Image of a stable (``n >= m``) or unstable (``n <= m``) vector from node m to n."""
    x = np.array(x, dtype=float)
    if n >= m:
        for k in range(m, n):
            x = chain.Phi_s[k] @ x
    else:
        for k in range(m - 1, n - 1, -1):
            x = chain.Psi[k] @ x
    return x


def verify_norm_lemma(norm: AdaptedNorm, samples: int = 1000, seed=0,
                      rel_tol: float = 1e-8) -> Certificate:
    """Check the three adapted-norm properties on random vectors and node pairs.

    ``|x| <= |x|_n`` on stable and unstable fibers; the stable image
    ``|A(n,m) P1_m x|_n <= D (mu_n/mu_m)^-lam nu_m^d |x|`` for ``n >= m``;
    and the unstable analogue for ``n <= m``.
    """
    rng = check_random_state(seed)
    chain = norm.chain
    k = norm.constants
    K, dim = chain.size, chain.dim
    cert = Certificate(checked_window=(float(chain.nodes[0]), float(chain.nodes[-1])))
    X = rng.normal(size=(samples, dim))
    X *= np.exp(rng.uniform(-3, 3, (samples, 1)))

    # lower bound on both fibers
    n = rng.integers(0, K, samples)
    lhs, rhs, where = [], [], []
    for i, fiber in ((1, "stable"), (2, "unstable")):
        V = np.einsum("nij,nj->ni", chain.P[i - 1, n], X)
        sup = chain.stable_sup if i == 1 else chain.unstable_sup
        vals, _ = sup(V, n, k.lam, k, norm.boost, norm.sup_horizon)
        lhs.append(chain.norm.vecs(V))
        rhs.append(vals)
        where += [(fiber, float(chain.nodes[j])) for j in n]
    cert.add("raw norm <= adapted norm", np.concatenate(lhs), np.concatenate(rhs),
             where=where, rel_tol=rel_tol)

    # pairs: images of projected vectors, evaluated in the adapted norm
    for i, name in ((1, "stable image bound"), (2, "unstable image bound")):
        a = rng.integers(0, K, samples)
        b = rng.integers(0, K, samples)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        m, tgt = (lo, hi) if i == 1 else (hi, lo)
        images = np.array([_propagate(chain, chain.P[i - 1, mm] @ x, mm, tt)
                           for x, mm, tt in zip(X, m, tgt)])
        sup = chain.stable_sup if i == 1 else chain.unstable_sup
        vals, _ = sup(images, tgt, k.lam, k, norm.boost, norm.sup_horizon)
        gap = chain.log_mu[tgt] - chain.log_mu[m]
        if i == 2:
            gap = -gap
        bound = k.D * np.exp(-k.lam * gap) * chain.nu[m] ** k.d * chain.norm.vecs(X)
        where = [(float(chain.nodes[t]), float(chain.nodes[s])) for t, s in zip(tgt, m)]
        cert.add(name, vals, bound, where=where, rel_tol=rel_tol)
    cert.notes.append(f"{samples} random samples per property on {K} nodes")
    return cert
