"""Brute-force reference solver for small discrete shadowing problems.

The shadow ``x`` is characterised directly by the orbit equations on the
window instead of by the fixed-point operator:

    (I - P3_{m+1}) (x_{m+1} - A_m x_m - f_m(x_m)) = 0     (orbit off the center)
    P3_{m+1} (x_{m+1} - y_{m+1}) = 0                      (center pinned to y)
    (P1_0 + P3_0)(x_0 - y_0) = 0,   P2_N (x_N - y_N) = 0  (boundary conditions)

for ``m = 0..N-1``.  The system is assembled densely and solved by least
squares (it is overdetermined but consistent), with Newton steps and a
finite-difference Jacobian of ``f`` when ``f`` is nonlinear.  The fixed
point ``z`` is recovered from ``x - y`` plus the center term.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_trajectory
from .exceptions import NewtonStalled, ShapeMismatch, SingularAssembly
from .shadow_discrete import apply_T
from .systems import DiscreteSystem

MAX_UNKNOWNS = 10_000
LINEAR_TOL = 1e-10
NEWTON_TOL = 1e-8


@dataclass
class BvpInstance:
    system: DiscreteSystem
    y: np.ndarray

    def __post_init__(self):
        sys = self.system
        self.y = check_trajectory(self.y, sys.horizon + 1, sys.dim, "pseudo-orbit")
        if (sys.horizon + 1) * sys.dim > MAX_UNKNOWNS:
            raise ShapeMismatch(f"{(sys.horizon + 1) * sys.dim} unknowns exceed the dense "
                                f"limit {MAX_UNKNOWNS}")


def _f_jacobians(sys, X):
    """Central-difference Jacobians of ``f_m`` at ``X[m]``, shape ``(len(X), dim, dim)``."""
    K, dim = X.shape
    J = np.zeros((K, dim, dim))
    idx = np.arange(K)
    h = 1e-7 * np.maximum(1.0, np.abs(X).max(axis=1))
    for j in range(dim):
        E = np.zeros_like(X)
        E[:, j] = h
        J[:, :, j] = (sys.f.batch(idx, X + E) - sys.f.batch(idx, X - E)) / (2 * h[:, None])
    return J


def _equations(sys, y, x):
    N, dim = sys.horizon, sys.dim
    A = sys.cocycle.A[:N]
    P1, P2, P3 = sys.projections.P[:, :N + 1]
    eye = np.eye(dim)
    step = x[1:] - np.einsum("nij,nj->ni", A, x[:-1]) - sys.f.batch(np.arange(N), x[:-1])
    rows = (np.einsum("nij,nj->ni", eye - P3[1:], step)
            + np.einsum("nij,nj->ni", P3[1:], x[1:] - y[1:]))
    b0 = (P1[0] + P3[0]) @ (x[0] - y[0])
    bN = P2[N] @ (x[N] - y[N])
    return np.concatenate([rows.ravel(), b0, bN])


def _jacobian(sys, x):
    N, dim = sys.horizon, sys.dim
    A = sys.cocycle.A[:N]
    P1, P2, P3 = sys.projections.P[:, :N + 1]
    eye = np.eye(dim)
    J = np.zeros(((N + 2) * dim, (N + 1) * dim))
    Jf = _f_jacobians(sys, x[:-1]) if not sys.f.is_zero else np.zeros((N, dim, dim))
    for m in range(N):
        r = slice(m * dim, (m + 1) * dim)
        J[r, m * dim:(m + 1) * dim] = -(eye - P3[m + 1]) @ (A[m] + Jf[m])
        J[r, (m + 1) * dim:(m + 2) * dim] = eye
    J[N * dim:(N + 1) * dim, :dim] = P1[0] + P3[0]
    J[(N + 1) * dim:, N * dim:] = P2[N]
    return J


def _center_term(sys, y, z_bar):
    """``-P3_n g_{n-1}`` with ``g_m = A_m y_m + f_m(y_m + zbar_m) - y_{m+1}``."""
    N = sys.horizon
    A = sys.cocycle.A[:N]
    P3 = sys.projections.P[2, :N + 1]
    g = (np.einsum("nij,nj->ni", A, y[:-1])
         + sys.f.batch(np.arange(N), y[:-1] + z_bar[:-1]) - y[1:])
    out = np.zeros_like(y)
    out[1:] = -np.einsum("nij,nj->ni", P3[1:], g)
    return out


def bvp_solve(inst: BvpInstance, x0=None, max_newton: int = 50, check: bool = True):
    """Reference fixed point ``z`` for the instance (and the shadow ``x``).

    Returns ``(z, x)``.  Raises :class:`SingularAssembly` when the stacked
    system is rank deficient and :class:`NewtonStalled` when Newton stops
    improving before the residual reaches round-off.
    """
    sys, y = inst.system, inst.y
    n_unknowns = y.size
    linear = sys.f.is_zero or sys.c == 0.0
    x = np.array(y if x0 is None else x0, dtype=float)
    F = _equations(sys, y, x)
    scale = 1.0 + np.abs(y).max()
    for it in range(max_newton):
        J = _jacobian(sys, x)
        step, _, rank, _ = np.linalg.lstsq(J, -F, rcond=None)
        if rank < n_unknowns:
            raise SingularAssembly(f"assembled system has rank {rank} < {n_unknowns} unknowns")
        x = x + step.reshape(x.shape)
        F_new = _equations(sys, y, x)
        if linear:
            F = F_new
            break
        small = np.abs(step).max() <= 1e-15 * scale or np.abs(F_new).max() <= 1e-15 * scale
        if small:
            F = F_new
            break
        if it > 5 and np.abs(F_new).max() >= 0.9 * np.abs(F).max():
            F = F_new
            if np.abs(F).max() <= 1e-13 * scale:
                break
            raise NewtonStalled(f"Newton stalled at residual {np.abs(F).max():.3g}")
        F = F_new
    else:
        if np.abs(F).max() > 1e-12 * scale:
            raise NewtonStalled(f"no Newton convergence in {max_newton} steps "
                                f"(residual {np.abs(F).max():.3g})")
    z_bar = x - y
    z = z_bar + _center_term(sys, y, z_bar)
    if check:
        resid = np.abs(apply_T(z, y, sys) - z).max()
        tol = (LINEAR_TOL if linear else NEWTON_TOL) * max(1.0, np.abs(z).max())
        if resid > tol:
            raise NewtonStalled(f"oracle fixed-point residual {resid:.3g} exceeds {tol:.3g}")
    return z, x


def compare(z_oracle, z_fixed_point) -> float:
    """``max_n |z_oracle[n] - z_fixed_point[n]|`` in the Euclidean norm."""
    a = np.asarray(z_oracle, dtype=float)
    b = np.asarray(z_fixed_point, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 1:
        return float(np.abs(a - b).max(initial=0.0))
    return float(np.linalg.norm(a - b, axis=-1).max(initial=0.0))
