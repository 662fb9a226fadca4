"""Linear dynamics sampled on an ordered set of nodes.

Discrete cocycles and evolution families on a time grid look the same once
the forward step maps ``Phi_j`` (node ``j`` to ``j+1``) and the unstable
backward steps ``Psi_j`` (node ``j+1`` to ``j`` on ``Im P2``) are fixed.  The
dichotomy tables and the adapted-norm suprema are computed here for both.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .norms import EuclideanNorm

HORIZON_RTOL = 1e-3


@dataclass
class NodeChain:
    nodes: np.ndarray          # (K,) times or indices
    Phi: np.ndarray            # (K-1, dim, dim)
    Psi: np.ndarray            # (K-1, dim, dim), maps Im P2_{j+1} into Im P2_j
    P: np.ndarray              # (3, K, dim, dim)
    log_mu: np.ndarray         # (K,)
    nu: np.ndarray             # (K,)
    center_w: np.ndarray       # (K,)
    norm: object = None

    def __post_init__(self):
        if self.norm is None:
            self.norm = EuclideanNorm()
        # stable steps re-projected so round-off leaking into unstable
        # directions is not amplified along the chain
        self.Phi_s = np.einsum("nij,njk->nik", self.P[0, 1:], self.Phi)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def dim(self) -> int:
        return self.P.shape[-1]

    def pair_tables(self, lam: float, d: float):
        """Operator norms and ``D = 1`` bounds for all node pairs, indexed ``[i, j]``.

        Stable entries (``i >= j``) hold ``||T(i, j) P1_j||`` and
        ``(mu_i/mu_j)^-lam nu_j^d``; unstable entries (``i <= j``) hold
        ``||T(i, j) P2_j||`` and ``(mu_j/mu_i)^-lam nu_j^d``.
        """
        K = self.size
        norm = self.norm
        s_lhs = np.full((K, K), np.nan)
        u_lhs = np.full((K, K), np.nan)
        M = np.array(self.P[0])
        for k in range(K):
            j = np.arange(K - k)
            s_lhs[j + k, j] = norm.ops(M[:K - k])
            if k < K - 1:
                M = np.einsum("nij,njk->nik", self.Phi_s[k:K - 1], M[:K - 1 - k])
        M = np.array(self.P[1])
        for k in range(K):
            j = np.arange(k, K)
            u_lhs[j - k, j] = norm.ops(M[:K - k])
            if k < K - 1:
                M = np.einsum("nij,njk->nik", self.Psi[:K - 1 - k], M[1:K - k])
        lm = self.log_mu
        nud = self.nu ** d
        ii, jj = np.meshgrid(np.arange(K), np.arange(K), indexing="ij")
        with np.errstate(over="ignore"):
            s_rhs = np.exp(-lam * (lm[ii] - lm[jj])) * nud[jj]
            u_rhs = np.exp(-lam * (lm[jj] - lm[ii])) * nud[jj]
        s_rhs[ii < jj] = np.nan
        u_rhs[ii > jj] = np.nan
        return s_lhs, s_rhs, u_lhs, u_rhs

    # -- adapted norm suprema -------------------------------------------------

    def _fiber_sup(self, X, idx, lam, consts, boost, horizon, forward):
        """Truncated suprema defining the stable (forward) or unstable norm.

        Returns ``(value, tail_bound)`` per requested node.  A node stops
        propagating once ``D nu^d (mu ratio)^-lam boost |x|`` drops below
        ``HORIZON_RTOL`` times its running maximum, after ``horizon`` steps,
        or at the end of the window.  ``tail_bound`` is that quantity at the
        stopping point (zero at the window end, where the windowed sup is
        exact); it bounds the omitted terms only when the dichotomy holds
        beyond the window.
        """
        K = self.size
        norm = self.norm
        idx = np.asarray(idx, dtype=int)
        V = np.array(X, dtype=float)
        base = norm.vecs(V)
        value = base.copy()
        lm = self.log_mu
        D = consts.D if consts is not None else 1.0
        d = consts.d if consts is not None else 0.0
        scale = D * self.nu[idx] ** d * boost * base
        pos = idx.copy()
        active = base > 0
        steps = 0
        limit = K if horizon is None else int(horizon)

        def bound_at(p, who):
            gap = (lm[p] - lm[idx[who]]) if forward else (lm[idx[who]] - lm[p])
            return scale[who] * np.exp(-lam * gap)

        tail = np.zeros(idx.size)
        while True:
            can = (pos < K - 1) if forward else (pos > 0)
            go = active & can & (steps < limit)
            # nodes that stop here keep the bound at their last position
            stop = active & ~go
            if stop.any():
                # the sup over the window is exact once its end is reached
                w = np.flatnonzero(stop & can)
                tail[w] = bound_at(pos[w], w)
                active &= ~stop
            if not go.any():
                break
            w = np.flatnonzero(go)
            if forward:
                V[w] = np.einsum("nij,nj->ni", self.Phi_s[pos[w]], V[w])
                pos[w] += 1
                gap = lm[pos[w]] - lm[idx[w]]
            else:
                V[w] = np.einsum("nij,nj->ni", self.Psi[pos[w] - 1], V[w])
                pos[w] -= 1
                gap = lm[idx[w]] - lm[pos[w]]
            term = norm.vecs(V[w]) * np.exp(lam * gap)
            value[w] = np.maximum(value[w], term)
            steps += 1
            b = bound_at(pos[w], w)
            done = b < HORIZON_RTOL * value[w]
            if done.any():
                ww = w[done]
                tail[ww] = b[done]
                active[ww] = False
        return value, tail

    def stable_sup(self, X, idx, lam, consts=None, boost=1.0, horizon=None):
        return self._fiber_sup(X, idx, lam, consts, boost, horizon, True)

    def unstable_sup(self, X, idx, lam, consts=None, boost=1.0, horizon=None):
        return self._fiber_sup(X, idx, lam, consts, boost, horizon, False)

    def project(self, i: int, Z, idx=None):
        """``P_i`` applied node-wise; ``i`` is 1, 2 or 3."""
        P = self.P[i - 1] if idx is None else self.P[i - 1][idx]
        return np.einsum("nij,nj->ni", P, Z)

    def subchain(self, idx) -> "NodeChain":
        """The chain restricted to the nodes ``idx``, with composed steps.

        Forward steps of the result are the composed stable steps, so it is
        meant for norms and stable/unstable propagation only.
        """
        idx = np.unique(np.asarray(idx, dtype=int))
        K = idx.size
        dim = self.dim
        Phi = np.empty((K - 1, dim, dim))
        Psi = np.empty((K - 1, dim, dim))
        for k in range(K - 1):
            a, b = idx[k], idx[k + 1]
            M = np.eye(dim)
            for j in range(a, b):
                M = self.Phi_s[j] @ M
            Phi[k] = M
            M = np.eye(dim)
            for j in range(b - 1, a - 1, -1):
                M = self.Psi[j] @ M
            Psi[k] = M
        return NodeChain(nodes=self.nodes[idx], Phi=Phi, Psi=Psi, P=self.P[:, idx],
                         log_mu=self.log_mu[idx], nu=self.nu[idx],
                         center_w=self.center_w[idx], norm=self.norm)
