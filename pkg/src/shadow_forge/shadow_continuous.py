"""Shadowing of continuous pseudo-trajectories on a time grid.

For a pseudo-trajectory ``y`` of ``x' = A(t) x + f(t, x)`` with defect

    G(t) = A(t) y(t) + f(t, y(t) + (I - P3(t)) z(t)) - y'(t),

the operator is

    (T z)(t) = -P3(t) G(t) + int_0^t T(t,s) P1(s) G(s) ds
                           - int_t^{t_max} T(t,s) P2(s) G(s) ds,

and ``x = y + (I - P3) z`` at its fixed point solves the equation up to the
center term ``-P3 G``.  Both integrals are evaluated by the composite
trapezoid rule on the grid through the recursions

    S_{j+1} = P1_{j+1} T_j S_j + h_j/2 (P1_{j+1} T_j P1_j G_j + P1_{j+1} G_{j+1}),
    U_j     = P2_j T_j^- U_{j+1} + h_j/2 (P2_j G_j + P2_j T_j^- P2_{j+1} G_{j+1}),

with ``T_j = T(t_{j+1}, t_j)`` and ``T_j^- = T(t_j, t_{j+1})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d

from ._chain import NodeChain
from ._validation import check_grid, check_random_state, check_trajectory
from .adapted_norms import AdaptedNorm
from .certificate import Certificate
from .exceptions import NotContractive, QuadratureUnresolved, ShapeMismatch, TailBoundTooLarge
from .shadow_discrete import (CENTER_TOL, DEFAULT_TOL, FIBER_RTOL, MAX_ITER, ShadowResult,
                              TruncationPolicy, _fixed_point, _iteration_bound,
                              theoretical_constants)
from .systems import ContinuousSystem

NORM_NODES = 1024
QUAD_RTOL = 1e-3


@dataclass
class QuadraturePolicy:
    """Trapezoid quadrature with a Richardson self-check.

    The check compares the operator on the grid with the operator on every
    other node; ``tolerance`` (absolute, default ``1e-3`` times the size of
    the result plus ``1e-12``) bounds the estimated error of the fine result.
    """

    tolerance: float | None = None
    check: bool = True
    truncation: TruncationPolicy = None

    def __post_init__(self):
        if self.truncation is None:
            self.truncation = TruncationPolicy()


@dataclass
class ContinuousPseudoOrbit:
    """Grid values of ``y`` and ``y'``.

    When ``y_prime`` is omitted it is formed by second-order differences and
    the estimated differentiation error is kept in ``fd_error`` so that it
    can be charged to the defect.
    """

    grid: np.ndarray
    y: np.ndarray
    y_prime: np.ndarray | None = None
    delta: float | None = None
    fd_error: np.ndarray | None = None
    source: str = ""

    def __post_init__(self):
        self.grid = check_grid(self.grid)
        self.y = check_trajectory(self.y, self.grid.size, name="pseudo-trajectory")
        if self.y_prime is None:
            self.y_prime, self.fd_error = derivative(self.grid, self.y)
        else:
            self.y_prime = check_trajectory(self.y_prime, self.grid.size, self.y.shape[1],
                                            "y'")
            if self.fd_error is None:
                self.fd_error = np.zeros(self.grid.size)


def derivative(grid, Y):
    """Second-order differences of ``Y`` on ``grid`` and an error estimate per node.

    The estimate is ``h^2/6 |Y'''|`` with the third derivative itself taken
    from differences.
    """
    Y = np.asarray(Y, dtype=float)
    d1 = np.gradient(Y, grid, axis=0, edge_order=2)
    if grid.size < 5:
        return d1, np.zeros(grid.size)
    d3 = np.gradient(np.gradient(d1, grid, axis=0, edge_order=2), grid, axis=0, edge_order=2)
    h = np.gradient(grid)
    err = h ** 2 / 6.0 * np.linalg.norm(d3, axis=1)
    return d1, err


def weighted_defect_continuous(po: ContinuousPseudoOrbit, sys: ContinuousSystem):
    """``delta = max_j (|y'_j - A_j y_j - f(t_j, y_j)| + fd_error_j) / weight(t_j)``."""
    if po.y.shape[1] != sys.dim:
        raise ShapeMismatch(f"pseudo-trajectory has dimension {po.y.shape[1]}, system {sys.dim}")
    raw = sys.norm.vecs(po.y_prime - sys.vector_field(po.grid, po.y)) + po.fd_error
    w = sys.weight(po.grid)
    if np.any(w <= 0):
        raise ValueError("defect weight must be positive on the grid")
    per_node = raw / w
    return float(per_node.max()), per_node


def _defects(z, po, sys, chain):
    z_bar = z - np.einsum("nij,nj->ni", chain.P[2], z)
    G = (np.einsum("nij,nj->ni", sys.A(po.grid), po.y)
         + sys.f.batch(po.grid, po.y + z_bar) - po.y_prime)
    return G, z_bar


def _trapezoid(G, chain: NodeChain):
    K, dim = G.shape
    P1, P2, P3 = chain.P
    h = np.diff(chain.nodes)
    PG1 = np.einsum("nij,nj->ni", P1, G)
    PG2 = np.einsum("nij,nj->ni", P2, G)
    S = np.zeros((K, dim))
    U = np.zeros((K, dim))
    Phi, Psi = chain.Phi_s, chain.Psi
    for j in range(K - 1):
        S[j + 1] = Phi[j] @ (S[j] + 0.5 * h[j] * PG1[j]) + 0.5 * h[j] * PG1[j + 1]
    for j in range(K - 2, -1, -1):
        U[j] = Psi[j] @ (U[j + 1] + 0.5 * h[j] * PG2[j + 1]) + 0.5 * h[j] * PG2[j]
    return -np.einsum("nij,nj->ni", P3, G) + S - U


def _coarse_index(K):
    idx = np.arange(0, K, 2)
    if idx[-1] != K - 1:
        idx = np.append(idx, K - 1)
    return idx


def quadrature_error(G, chain: NodeChain, fine=None) -> float:
    """Richardson estimate ``max |T_h - T_2h| / 3`` at the shared nodes."""
    if chain.size < 5:
        return 0.0
    fine = _trapezoid(G, chain) if fine is None else fine
    idx = _coarse_index(chain.size)
    coarse = _trapezoid(G[idx], chain.subchain(idx))
    return float(np.linalg.norm(fine[idx] - coarse, axis=1).max() / 3.0)


def apply_T_continuous(z, po: ContinuousPseudoOrbit, sys: ContinuousSystem,
                       quad: QuadraturePolicy | None = None, return_error: bool = False):
    """The operator at every grid node (trapezoid rule).

    Raises :class:`QuadratureUnresolved` when the Richardson estimate
    exceeds the policy tolerance.  With ``return_error`` the estimate is
    returned as well.
    """
    quad = quad or QuadraturePolicy()
    chain = sys.chain(po.grid)
    z = check_trajectory(z, po.grid.size, sys.dim, "z")
    G, _ = _defects(z, po, sys, chain)
    Tz = _trapezoid(G, chain)
    err = 0.0
    if quad.check:
        err = quadrature_error(G, chain, Tz)
        scale = float(np.linalg.norm(Tz, axis=1).max(initial=0.0))
        tol = quad.tolerance if quad.tolerance is not None else QUAD_RTOL * scale + 1e-12
        if err > tol:
            raise QuadratureUnresolved(
                f"halving the grid changes the operator by ~{err:.3g} (> {tol:.3g}); refine the grid")
    return (Tz, err) if return_error else Tz


def tail_bounds_continuous(sys: ContinuousSystem, grid, delta: float) -> np.ndarray:
    """``D delta (1 + cC)/lam (mu(t)/mu(t_max))^lam`` at the grid times."""
    k = sys.constants
    consts = theoretical_constants(sys.c, k.D, k.lam, "continuous")
    C = consts.C if consts.contractive else 0.0
    lm = np.asarray(sys.rate.log_mu(grid), dtype=float)
    return k.D * delta * (1 + sys.c * C) / k.lam * np.exp(k.lam * (lm - lm[-1]))


def norm_for(sys: ContinuousSystem, grid, max_nodes: int = NORM_NODES):
    """Adapted norm on (a subsample of) the grid and the node indices it uses."""
    chain = sys.chain(grid)
    idx = np.arange(chain.size)
    if chain.size > max_nodes:
        idx = np.unique(np.linspace(0, chain.size - 1, max_nodes).round().astype(int))
        chain = chain.subchain(idx)
    return AdaptedNorm(chain, sys.constants), idx


def solve_shadow_continuous(po: ContinuousPseudoOrbit, sys: ContinuousSystem,
                            tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                            quad: QuadraturePolicy | None = None) -> ShadowResult:
    """Fixed point of :func:`apply_T_continuous` by Picard iteration from zero.

    The adapted sup-norm is evaluated on at most 1024 grid nodes.  Raises
    :class:`NotContractive` when ``q = c(2D+1) + 2cD/lam >= 1``.
    """
    quad = quad or QuadraturePolicy()
    k = sys.constants
    consts = theoretical_constants(sys.c, k.D, k.lam, "continuous")
    if not consts.contractive:
        raise NotContractive(
            f"contraction constant q = c(2D+1) + 2cD/lam = {consts.q:.6g} >= 1 "
            f"(c={sys.c:g}, D={k.D:g}, lam={k.lam:g})")
    delta, _ = weighted_defect_continuous(po, sys)
    tails = tail_bounds_continuous(sys, po.grid, delta)
    trunc = quad.truncation
    if trunc.kind != "finite_horizon" and tails.max() > trunc.tol_for(delta):
        raise TailBoundTooLarge(
            f"tail bound {tails.max():.3g} at the window end exceeds {trunc.tol_for(delta):.3g}; "
            "lengthen the window")
    norm, idx = norm_for(sys, po.grid)
    approx = [False]

    def sup(Z):
        v = norm.sup(Z[idx])
        approx[0] = approx[0] or v.approximate
        return v.value

    unchecked = QuadraturePolicy(quad.tolerance, False, trunc)

    def op(Z):
        return apply_T_continuous(Z, po, sys, unchecked)

    z0 = np.zeros_like(po.y)
    T0, quad_err0 = apply_T_continuous(z0, po, sys, quad, return_error=True)
    T0_norm = sup(T0)
    notes = [f"adapted norms evaluated on {idx.size} of {po.grid.size} grid nodes"]
    if delta == 0.0 and T0_norm == 0.0:
        z, iters, updates, ratios = z0, 0, [], []
    else:
        z, iters, updates, ratios = _fixed_point(op, sup, z0, consts.q, tol, max_iter,
                                                 linear=(sys.c == 0.0))
    Tz, quad_err = apply_T_continuous(z, po, sys, quad, return_error=True)
    fp_residual = sup(Tz - z)
    if sys.c == 0.0 and iters:
        notes.append(f"linear case: one application, idempotence defect {fp_residual:.3g}")
    notes.append(f"quadrature error estimate {max(quad_err0, quad_err):.3g}")
    P3 = sys.chain(po.grid).P[2]
    z_bar = z - np.einsum("nij,nj->ni", P3, z)
    tail = float(tails.max())
    result = ShadowResult(
        nodes=po.grid, y=po.y, z=z, z_bar=z_bar, x=po.y + z_bar, q=consts.q,
        D_bar=consts.D_bar, C=consts.C, delta=delta, iterations=iters,
        fp_residual=fp_residual, T0_norm=T0_norm,
        measured_q=max(ratios) if ratios else 0.0, tail_bound=tail,
        truncation_flag=bool(approx[0] or tail > trunc.tol_for(delta)),
        iteration_bound=_iteration_bound(tol, consts.C, delta, consts.q),
        update_norms=updates, tol=tol, mode="continuous", policy=trunc.kind,
        horizon_used=float(po.grid[-1]), notes=notes)
    result.quadrature_error = max(quad_err0, quad_err)
    return result


def _grid_residual(r: ShadowResult, po: ContinuousPseudoOrbit, sys: ContinuousSystem):
    """``x' - A x - f(t, x)`` on the grid with ``x' = y' + (differences of z_bar)``."""
    zb_prime = np.gradient(r.z_bar, po.grid, axis=0, edge_order=2)
    x_prime = po.y_prime + zb_prime
    return x_prime - sys.vector_field(po.grid, r.x), x_prime


def residual_budget(r: ShadowResult, po: ContinuousPseudoOrbit, sys: ContinuousSystem,
                    richardson: bool = True):
    """Grid residual of the shadow and its discretization budget per node.

    Two estimates of the second-order consistency error are added.  The
    local one is ``|F_{j+1} - 2F_j + F_{j-1}|`` with
    ``F = A z_bar + (I - P3) G`` (four times the leading term of the
    central difference).  It vanishes where the second difference changes
    sign, so a Richardson estimate backs it up: the problem is solved again
    on every other node and half of that residual outside the center
    fibers (second order predicts a quarter), maximised over neighbouring
    nodes, is charged as well.  The
    differentiation error already charged to ``y'`` and a round-off floor
    complete the budget.
    """
    chain = sys.chain(po.grid)
    grid = po.grid
    res, x_prime = _grid_residual(r, po, sys)
    G, z_bar = _defects(r.z, po, sys, chain)
    F = (np.einsum("nij,nj->ni", sys.A(grid), z_bar)
         + G - np.einsum("nij,nj->ni", chain.P[2], G))
    d2 = np.zeros(grid.size)
    if grid.size >= 3:
        d2[1:-1] = np.linalg.norm(F[2:] - 2 * F[1:-1] + F[:-2], axis=1)
        d2[0], d2[-1] = 2 * d2[1], 2 * d2[-2]
    eps = 64 * np.finfo(float).eps * (1 + np.linalg.norm(F, axis=1)
                                      + np.linalg.norm(x_prime, axis=1))
    budget = d2 + po.fd_error + eps
    if richardson and grid.size >= 9 and (r.delta > 0 or np.any(r.z)):
        idx = _coarse_index(grid.size)
        coarse = ContinuousPseudoOrbit(grid[idx], po.y[idx], po.y_prime[idx],
                                       fd_error=po.fd_error[idx])
        rc = solve_shadow_continuous(coarse, sys, tol=r.tol,
                                     quad=QuadraturePolicy(check=False))
        rc_vec = _grid_residual(rc, coarse, sys)[0]
        P3c = chain.P[2][idx]
        res_c = np.linalg.norm(rc_vec - np.einsum("nij,nj->ni", P3c, rc_vec), axis=1)
        res_c = maximum_filter1d(res_c, 3)
        budget = budget + 0.5 * np.interp(grid, grid[idx], res_c)
    return res, budget


def verify_shadow_continuous(r: ShadowResult, po: ContinuousPseudoOrbit,
                             sys: ContinuousSystem) -> Certificate:
    """Node-wise check of the conclusions on the grid.

    Center agreement, ``|x - y| <= C delta``, residual in ``Im P3`` up to
    the discretization budget, and the pointwise residual bound
    ``C delta (2D+1) nu^d max(1, mu'/mu)`` (plus budget).
    """
    k = sys.constants
    grid = po.grid
    chain = sys.chain(grid)
    P1, P2, P3 = chain.P
    cert = Certificate(checked_window=(float(grid[0]), float(grid[-1])))
    where = [float(t) for t in grid]
    diff = r.x - r.y
    cert.add("center agreement", sys.norm.vecs(np.einsum("nij,nj->ni", P3, diff)),
             CENTER_TOL, where=where, abs_floor=0.0)
    cert.add("distance bound", sys.norm.vecs(diff), r.C * r.delta, where=where)
    res, budget = residual_budget(r, po, sys)
    rn = sys.norm.vecs(res)
    off = sys.norm.vecs(np.einsum("nij,nj->ni", P1 + P2, res))
    cert.add("residual in center fiber", off, budget + FIBER_RTOL * (1 + rn), where=where,
             abs_floor=0.0)
    mu_ratio = np.asarray(sys.rate.mu_prime(grid) / sys.rate.mu(grid), dtype=float)
    bound = (r.C * r.delta * (2 * k.D + 1) * np.asarray(sys.rate.nu(grid)) ** k.d
             * np.maximum(1.0, mu_ratio))
    cert.add("residual bound", rn, bound + budget, where=where)
    quad_err = getattr(r, "quadrature_error", 0.0)
    cert.add("T0 bound", r.T0_norm, r.D_bar * r.delta * (1 + QUAD_RTOL) + quad_err)
    cert.add("fixed point", r.fp_residual,
             max(r.tol, 64 * np.finfo(float).eps * (1 + float(np.abs(r.z).max(initial=0)))))
    cert.notes.append(f"residual discretization budget: max {budget.max():.3g}")
    cert.notes.append(f"checked at {grid.size} grid nodes in [{grid[0]:g}, {grid[-1]:g}]; "
                      "behaviour between nodes is not certified")
    if r.truncation_flag:
        cert.approximate = True
        cert.notes.append(f"integral beyond t_max dropped; tail bound {r.tail_bound:.3g}")
    return cert


def measure_contraction_continuous(po, sys, pairs: int = 20, radius=None, seed=0) -> dict:
    """Largest observed ``||T z1 - T z2|| / ||z1 - z2||`` over random grid functions."""
    rng = check_random_state(seed)
    k = sys.constants
    consts = theoretical_constants(sys.c, k.D, k.lam, "continuous")
    delta = weighted_defect_continuous(po, sys)[0]
    norm, idx = norm_for(sys, po.grid)
    R = radius if radius is not None else max(consts.C * delta, 1e-3)
    quad = QuadraturePolicy(check=False)
    t = po.grid
    ratios = []
    for _ in range(pairs):
        Z = []
        for _ in range(2):
            # smooth random grid functions so the quadrature stays resolved
            freq = rng.uniform(0.1, 2.0, size=(1, sys.dim))
            phase = rng.uniform(0, 2 * math.pi, size=(1, sys.dim))
            W = np.sin(freq * t[:, None] + phase) * rng.normal(size=(1, sys.dim))
            W *= rng.uniform(0, 1) * R / norm.sup(W[idx]).value
            Z.append(W)
        num = norm.sup((apply_T_continuous(Z[0], po, sys, quad)
                        - apply_T_continuous(Z[1], po, sys, quad))[idx]).value
        den = norm.sup((Z[0] - Z[1])[idx]).value
        if den > 0:
            ratios.append(num / den)
    return {"max_ratio": float(max(ratios)), "ratios": np.array(ratios), "q": consts.q}
