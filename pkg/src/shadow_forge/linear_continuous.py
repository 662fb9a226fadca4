"""Evolution families of ``x' = A(t) x`` and continuous dichotomy certification."""
from __future__ import annotations

from typing import Callable

import numpy as np

from ._chain import NodeChain
from ._validation import check_grid, check_random_state
from .certificate import Certificate
from .exceptions import ShapeMismatch, StepTooCoarse
from .linear_discrete import (PROJ_TOL, DichotomyConstants,
                              fit_D_from_tables, tables_certificate)
from .norms import EuclideanNorm
from .rates import DEFAULT_T_MAX, RatePair

COMPOSITION_TOL = 1e-4
COND_LIMIT = 1e8
N_CERT_GRID = 200


def _batch(fn: Callable, times, dim: int) -> np.ndarray:
    """Evaluate a matrix-valued ``fn`` on an array of times as ``(n, dim, dim)``."""
    times = np.asarray(times, dtype=float)
    try:
        with np.errstate(over="ignore", under="ignore"):
            out = np.asarray(fn(times), dtype=float)
        if out.shape == (times.size, dim, dim):
            return out
    except (TypeError, ValueError):
        pass
    return np.array([np.asarray(fn(float(t)), dtype=float).reshape(dim, dim)
                     for t in times])


def _rk4_steps(A_eval, dim, t0, h):
    """Classical RK4 propagators of ``X' = A X`` over ``[t0, t0 + h]`` (vectorized in ``t0``).

    ``h`` may be negative (backward steps) and may vary per entry.
    """
    t0 = np.atleast_1d(np.asarray(t0, dtype=float))
    h = np.broadcast_to(np.asarray(h, dtype=float), t0.shape)[:, None, None]
    A1 = _batch(A_eval, t0, dim)
    A2 = _batch(A_eval, t0 + 0.5 * h[:, 0, 0], dim)
    A3 = _batch(A_eval, t0 + h[:, 0, 0], dim)
    eye = np.eye(dim)
    k1 = A1
    k2 = A2 @ (eye + 0.5 * h * k1)
    k3 = A2 @ (eye + 0.5 * h * k2)
    k4 = A3 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _chain_product(mats):
    """``mats[-1] @ ... @ mats[0]`` (later steps act last)."""
    out = np.eye(mats.shape[-1])
    for M in mats:
        out = M @ out
    return out


class EvolutionFamily:
    """``T(t, s)`` for ``x' = A(t) x``, either in closed form or integrated.

    Closed-form families take ``T_eval(t, s)``; arrays of ``t`` and ``s``
    are used when the callable broadcasts, otherwise it is looped.
    Integrated families are built by :func:`integrate_family`.
    """

    def __init__(self, dim: int, mode: str, T_eval: Callable | None = None,
                 A_eval: Callable | None = None, grid_step: float | None = None,
                 t_max: float = np.inf, name: str = ""):
        if mode not in ("closed_form", "integrated"):
            raise ValueError(f"unknown mode {mode!r}")
        self.dim = int(dim)
        self.mode = mode
        self._T_eval = T_eval
        self.A_eval = A_eval
        self.grid_step = grid_step
        self.t_max = float(t_max)
        self.name = name
        self.self_check = None

    @classmethod
    def closed_form(cls, T_eval, dim, A_eval=None, name="") -> "EvolutionFamily":
        return cls(dim, "closed_form", T_eval=T_eval, A_eval=A_eval, name=name)

    def __repr__(self):
        extra = f", h={self.grid_step:g}, t_max={self.t_max:g}" if self.mode == "integrated" else ""
        return f"EvolutionFamily(dim={self.dim}, mode={self.mode!r}{extra})"

    def A(self, t):
        if self.A_eval is None:
            raise ValueError("this family has no generator A(t)")
        return _batch(self.A_eval, np.atleast_1d(t), self.dim)[0]

    def _check_window(self, *ts):
        for t in ts:
            t = np.asarray(t)
            if np.any(t < 0) or np.any(t > self.t_max * (1 + 1e-12)):
                raise ValueError(f"time outside [0, {self.t_max:g}]")

    def T(self, t: float, s: float) -> np.ndarray:
        """The propagator from time ``s`` to time ``t`` (either order)."""
        return self.T_many(np.array([t]), np.array([s]))[0]

    def T_many(self, t, s) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t, s = np.broadcast_arrays(t, s)
        self._check_window(t, s)
        if self.mode == "closed_form":
            return self._closed_many(t, s)
        return np.array([self._integrated(a, b) for a, b in zip(t, s)])

    def _closed_many(self, t, s):
        try:
            with np.errstate(over="ignore", under="ignore"):
                out = np.asarray(self._T_eval(t, s), dtype=float)
            if out.shape == (t.size, self.dim, self.dim):
                return out
        except (TypeError, ValueError):
            pass
        return np.array([np.asarray(self._T_eval(float(a), float(b)), dtype=float)
                         .reshape(self.dim, self.dim) for a, b in zip(t, s)])

    def step_maps(self, grid):
        """``T(g_{j+1}, g_j)`` and ``T(g_j, g_{j+1})`` for consecutive grid points."""
        grid = check_grid(grid)
        self._check_window(grid)
        if self.mode == "closed_form":
            return (self._closed_many(grid[1:], grid[:-1]),
                    self._closed_many(grid[:-1], grid[1:]))
        pos = np.searchsorted(self._nodes, grid)
        pos = np.clip(pos, 0, self._nodes.size - 1)
        if np.all(np.abs(self._nodes[pos] - grid) <= 1e-12 * max(1.0, self.t_max)):
            # grid made of cached nodes: compose the one-step maps directly
            fwd = np.array([_chain_product(self._fwd[i:j]) for i, j in zip(pos[:-1], pos[1:])])
            bwd = np.array([_chain_product(self._bwd[i:j][::-1])
                            for i, j in zip(pos[:-1], pos[1:])])
            return fwd, bwd
        fwd = np.array([self._integrated(b, a) for a, b in zip(grid[:-1], grid[1:])])
        bwd = np.array([self._integrated(a, b) for a, b in zip(grid[:-1], grid[1:])])
        return fwd, bwd

    # -- integrated mode -------------------------------------------------------

    def _setup_integrated(self, t_max, h):
        n = max(1, int(np.ceil(t_max / h - 1e-9)))
        self.grid_step = t_max / n
        self.t_max = float(t_max)
        nodes = np.arange(n + 1) * self.grid_step
        nodes[-1] = t_max
        self._nodes = nodes
        hs = np.diff(nodes)
        self._fwd = _rk4_steps(self.A_eval, self.dim, nodes[:-1], hs)
        self._bwd = _rk4_steps(self.A_eval, self.dim, nodes[1:], -hs)
        cum = np.empty((n + 1, self.dim, self.dim))
        cum[0] = np.eye(self.dim)
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n):
                cum[k + 1] = self._fwd[k] @ cum[k]
            cond = np.linalg.cond(cum) if np.all(np.isfinite(cum)) else None
        if cond is None:
            cond = np.array([np.linalg.cond(M) if np.all(np.isfinite(M)) else np.inf
                             for M in cum])
        self._cum = cum
        self._cum_ok = np.isfinite(cond) & (cond < COND_LIMIT)
        self._cum_inv = np.zeros_like(cum)
        if self._cum_ok.any():
            self._cum_inv[self._cum_ok] = np.linalg.inv(cum[self._cum_ok])

    def _locate(self, t):
        k = int(np.searchsorted(self._nodes, t, side="right") - 1)
        return min(max(k, 0), self._nodes.size - 1)

    def _node_to_node(self, j, i):
        """``T(t_j, t_i)`` between cached nodes."""
        if j == i:
            return np.eye(self.dim)
        if self._cum_ok[i] and self._cum_ok[j]:
            return self._cum[j] @ self._cum_inv[i]
        # strongly contracting or expanding: recompute from the one-step maps
        if j > i:
            return _chain_product(self._fwd[i:j])
        return _chain_product(self._bwd[j:i][::-1])

    def _partial(self, t_from, t_to):
        if t_to == t_from:
            return np.eye(self.dim)
        return _rk4_steps(self.A_eval, self.dim, [t_from], [t_to - t_from])[0]

    def _integrated(self, t, s):
        if t == s:
            return np.eye(self.dim)
        i, j = self._locate(s), self._locate(t)
        ti, tj = self._nodes[i], self._nodes[j]
        if i == j:
            return self._partial(s, t)
        if t > s:
            # s -> t_{i+1} -> ... -> t_j -> t
            head = self._partial(s, self._nodes[i + 1])
            return self._partial(tj, t) @ self._node_to_node(j, i + 1) @ head
        # t < s: s -> t_i -> ... -> t_{j+1} -> t
        head = self._partial(s, ti)
        return self._partial(self._nodes[j + 1], t) @ self._node_to_node(j + 1, i) @ head

    def composition_error(self, n_triples: int = 24, seed=0) -> float:
        """Worst relative defect of ``T(t,s) T(s,r) = T(t,r)`` on random triples."""
        rng = check_random_state(seed)
        worst = 0.0
        for _ in range(n_triples):
            r, s, t = rng.uniform(0.0, self.t_max, 3)
            if rng.random() < 0.5:
                r, s, t = np.sort([r, s, t])
            Tts, Tsr, Ttr = self.T(t, s), self.T(s, r), self.T(t, r)
            scale = max(np.linalg.norm(Tts, 2) * np.linalg.norm(Tsr, 2), 1e-300)
            if not np.isfinite(scale):
                continue
            worst = max(worst, float(np.linalg.norm(Tts @ Tsr - Ttr, 2) / scale))
        return worst


def integrate_family(A_eval: Callable, dim: int, t_max: float, h: float = 1e-3,
                     check: bool = True, seed=0) -> EvolutionFamily:
    """Integrate ``X' = A(t) X`` with RK4 and cache the one-step maps.

    ``T(t, s)`` uses the cached cumulative maps when they are well
    conditioned and otherwise recomposes the one-step maps; off-node
    times are reached with a partial step.  Raises :class:`StepTooCoarse`
    when the composition self-check exceeds ``1e-4``.
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    F = EvolutionFamily(dim, "integrated", A_eval=A_eval, grid_step=h, t_max=t_max)
    F._setup_integrated(float(t_max), float(h))
    if check:
        err = F.composition_error(seed=seed)
        identity = float(np.abs(F.T(0.37 * t_max, 0.37 * t_max) - np.eye(dim)).max())
        F.self_check = {"composition": err, "identity": identity}
        if not err <= COMPOSITION_TOL:
            raise StepTooCoarse(
                f"composition law defect {err:.3g} exceeds {COMPOSITION_TOL:g}; reduce h")
    return F


class ContinuousProjectionField:
    """Projections ``P1(t), P2(t), P3(t)``; each entry a callable or a constant matrix.

    ``P3`` defaults to ``I - P1 - P2``.
    """

    def __init__(self, P1, P2, P3=None, dim: int | None = None):
        mats = [P for P in (P1, P2, P3) if P is not None and not callable(P)]
        if dim is None:
            if not mats:
                raise ShapeMismatch("dim is required when every projection is a callable")
            dim = np.asarray(mats[0]).shape[-1]
        self.dim = int(dim)
        self._P = [P1, P2, P3]

    @classmethod
    def coordinate(cls, dim, stable, unstable):
        P1 = np.zeros((dim, dim))
        P2 = np.zeros((dim, dim))
        P1[list(stable), list(stable)] = 1.0
        P2[list(unstable), list(unstable)] = 1.0
        return cls(P1, P2)

    def _eval(self, i, t):
        P = self._P[i]
        if P is None:
            return None
        if callable(P):
            return _batch(P, t, self.dim)
        P = np.asarray(P, dtype=float)
        if P.shape != (self.dim, self.dim):
            raise ShapeMismatch(f"projection has shape {P.shape}, expected {(self.dim, self.dim)}")
        return np.broadcast_to(P, (t.size, self.dim, self.dim)).copy()

    def at(self, t) -> np.ndarray:
        """All three projections at the times ``t`` as ``(3, n, dim, dim)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        P1, P2, P3 = (self._eval(i, t) for i in range(3))
        if P3 is None:
            P3 = np.eye(self.dim) - P1 - P2
        return np.stack([P1, P2, P3])


def default_cert_grid(rate: RatePair, t_max: float | None = None,
                      n: int = N_CERT_GRID) -> np.ndarray:
    """``n`` points in ``[0, t_max]`` evenly spaced in ``ln mu``."""
    if t_max is None:
        t_max = DEFAULT_T_MAX.get(rate.kind, DEFAULT_T_MAX["user_defined"])
    fine = np.linspace(0.0, t_max, 20 * n)
    lm = rate.log_mu(fine)
    target = np.linspace(lm[0], lm[-1], n)
    grid = np.interp(target, lm, fine)
    grid[0], grid[-1] = 0.0, t_max
    return np.unique(grid)


def build_chain_continuous(F: EvolutionFamily, P: ContinuousProjectionField,
                           rate: RatePair, grid, norm=None) -> NodeChain:
    grid = check_grid(grid)
    if P.dim != F.dim:
        raise ShapeMismatch(f"projections act on R^{P.dim}, family on R^{F.dim}")
    fwd, bwd = F.step_maps(grid)
    Pg = P.at(grid)
    return NodeChain(nodes=grid, Phi=fwd, Psi=Pg[1, :-1] @ bwd @ Pg[1, 1:], P=Pg,
                     log_mu=np.asarray(rate.log_mu(grid), dtype=float) * np.ones_like(grid),
                     nu=np.asarray(rate.nu(grid), dtype=float) * np.ones_like(grid),
                     center_w=np.asarray(rate.center_weight(grid), dtype=float)
                     * np.ones_like(grid),
                     norm=norm or EuclideanNorm())


def structural_certificate_continuous(F, P, grid, fwd=None, Pg=None) -> Certificate:
    """Projection algebra on the grid and equivariance on consecutive grid pairs."""
    grid = check_grid(grid)
    cert = Certificate(checked_window=(float(grid[0]), float(grid[-1])))
    if Pg is None:
        Pg = P.at(grid)
    if fwd is None:
        fwd = F.step_maps(grid)[0]
    eye = np.eye(P.dim)
    where = [float(t) for t in grid]
    cert.add("P1+P2+P3=I", np.abs(Pg.sum(axis=0) - eye).max(axis=(1, 2)), PROJ_TOL,
             where=where, abs_floor=0.0)
    for i in range(3):
        for j in range(3):
            prod = np.einsum("nab,nbc->nac", Pg[i], Pg[j])
            target = Pg[i] if i == j else 0.0
            name = f"P{i + 1}^2=P{i + 1}" if i == j else f"P{i + 1}P{j + 1}=0"
            cert.add(name, np.abs(prod - target).max(axis=(1, 2)), PROJ_TOL,
                     where=where, abs_floor=0.0)
    scale = np.maximum(np.linalg.norm(fwd, 2, axis=(1, 2)), 1.0)
    pairs = [(float(a), float(b)) for a, b in zip(grid[1:], grid[:-1])]
    for i in range(3):
        lhs = np.einsum("nab,nbc->nac", fwd, Pg[i, :-1])
        rhs = np.einsum("nab,nbc->nac", Pg[i, 1:], fwd)
        err = np.linalg.norm(lhs - rhs, 2, axis=(1, 2)) / scale
        cert.add(f"equivariance P{i + 1}", err, 1e-6, where=pairs, abs_floor=0.0)
    return cert


def certify_dichotomy_continuous(F: EvolutionFamily, P: ContinuousProjectionField,
                                 rate: RatePair, k: DichotomyConstants, grid=None,
                                 norm=None, t_max: float | None = None) -> Certificate:
    """Check both dichotomy estimates on all pairs of grid times.

    The default grid has 200 points in ``[0, t_max]`` spaced evenly in
    ``ln mu``.  For integrated families the composition self-check is
    reported alongside.
    """
    if grid is None:
        if t_max is None and np.isfinite(F.t_max):
            t_max = min(F.t_max, DEFAULT_T_MAX.get(rate.kind, F.t_max))
        grid = default_cert_grid(rate, t_max)
    chain = build_chain_continuous(F, P, rate, grid, norm)
    cert = structural_certificate_continuous(F, P, chain.nodes, chain.Phi, chain.P)
    if F.mode == "integrated":
        err = F.self_check["composition"] if F.self_check else F.composition_error()
        cert.add("composition law", err, COMPOSITION_TOL, abs_floor=0.0)
    if not cert.overall:
        cert.notes.append("structural checks failed; dichotomy estimates not evaluated")
        return cert
    tables_certificate(cert, chain.pair_tables(k.lam, k.d), k, nodes=chain.nodes)
    cert.notes.append(
        f"certified on {chain.size} grid times in [{chain.nodes[0]:g}, {chain.nodes[-1]:g}] only")
    return cert


def fit_min_D_continuous(F, P, rate, lam, d, grid=None, norm=None, t_max=None) -> float:
    """Smallest ``D`` for which both estimates hold on the grid."""
    if grid is None:
        if t_max is None and np.isfinite(F.t_max):
            t_max = min(F.t_max, DEFAULT_T_MAX.get(rate.kind, F.t_max))
        grid = default_cert_grid(rate, t_max)
    chain = build_chain_continuous(F, P, rate, grid, norm)
    return fit_D_from_tables(chain.pair_tables(lam, d))
