"""Second-order equations ``x'' = A(t) x' + B(t) x + f(t, x', x)`` via the companion lift.

With ``w = (x', x)`` the equation becomes ``w' = C(t) w + g(t, w)`` where
``C(t)(w1, w2) = (A w1 + B w2, w1)`` and ``g(t, w) = (f(t, w1, w2), 0)``.
All companion-space bounds use the product norm ``|(w1, w2)|' = |w1| + |w2|``.
A Lipschitz bound ``c weight(t) (|dw1| + |dw2|)`` on ``f`` is then the same
bound on ``g`` in the product norm, so the first-order machinery applies
unchanged and the shadow is the second block of the companion shadow.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from ._validation import check_grid, check_trajectory
from .certificate import Certificate
from .linear_continuous import (ContinuousProjectionField, EvolutionFamily, _batch,
                                certify_dichotomy_continuous, fit_min_D_continuous,
                                integrate_family)
from .linear_discrete import DichotomyConstants
from .nonlinearity import ContinuousNonlinearity
from .norms import ProductNorm
from .rates import RatePair, make_rate
from .shadow_continuous import ContinuousPseudoOrbit, derivative, residual_budget
from .systems import ContinuousSystem


@dataclass
class SecondOrderSystem:
    """Coefficients ``A(t), B(t)`` and perturbation ``f(t, X1, X2)`` (batched over ``t``).

    ``A`` and ``B`` may be constant matrices or callables of a scalar time.
    ``c`` is the Lipschitz constant of ``f`` relative to ``rate``'s defect weight.
    """

    A: object
    B: object
    dim: int
    rate: RatePair
    f: Callable | None = None
    c: float = 0.0
    d: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be >= 0")

    @property
    def constant(self) -> bool:
        return not callable(self.A) and not callable(self.B)

    def coeffs(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = []
        for M in (self.A, self.B):
            if callable(M):
                out.append(_batch(M, t, self.dim))
            else:
                M = np.asarray(M, dtype=float).reshape(self.dim, self.dim)
                out.append(np.broadcast_to(M, (t.size, self.dim, self.dim)))
        return out

    def forcing(self, t, X1, X2) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        X1 = np.asarray(X1, dtype=float).reshape(t.size, self.dim)
        X2 = np.asarray(X2, dtype=float).reshape(t.size, self.dim)
        if self.f is None:
            return np.zeros_like(X1)
        return np.asarray(self.f(t, X1, X2), dtype=float).reshape(X1.shape)

    def residual(self, grid, x, x_prime=None, x_second=None) -> np.ndarray:
        """``|x'' - A x' - B x - f(t, x', x)|`` per node; derivatives by differences if omitted."""
        grid = check_grid(grid)
        x = check_trajectory(x, grid.size, self.dim, "x")
        if x_prime is None:
            x_prime = derivative(grid, x)[0]
        if x_second is None:
            x_second = derivative(grid, x_prime)[0]
        A, B = self.coeffs(grid)
        r = (x_second - np.einsum("nij,nj->ni", A, x_prime) - np.einsum("nij,nj->ni", B, x)
             - self.forcing(grid, x_prime, x))
        return np.linalg.norm(r, axis=1)


def companion_matrix(A, B) -> np.ndarray:
    """Stack of ``[[A, B], [I, 0]]`` for stacks of ``A`` and ``B``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    k = A.shape[-1]
    out = np.zeros(A.shape[:-2] + (2 * k, 2 * k))
    out[..., :k, :k] = A
    out[..., :k, k:] = B
    out[..., k:, :k] = np.eye(k)
    return out


@dataclass
class CompanionSystem:
    """The first-order form of a :class:`SecondOrderSystem` on ``R^dim x R^dim``."""

    second_order: SecondOrderSystem
    family: EvolutionFamily
    g: ContinuousNonlinearity
    norm: ProductNorm

    @property
    def dim(self) -> int:
        return 2 * self.second_order.dim

    def C(self, t) -> np.ndarray:
        A, B = self.second_order.coeffs(t)
        return companion_matrix(A, B)

    def fit_D(self, projections: ContinuousProjectionField, lam: float, d: float = 0.0,
              grid=None, t_max=None) -> float:
        return fit_min_D_continuous(self.family, projections, self.second_order.rate, lam, d,
                                    grid=grid, norm=self.norm, t_max=t_max)

    def certify(self, projections: ContinuousProjectionField, constants: DichotomyConstants,
                grid=None, t_max=None) -> Certificate:
        return certify_dichotomy_continuous(self.family, projections, self.second_order.rate,
                                            constants, grid=grid, norm=self.norm, t_max=t_max)

    def system(self, projections: ContinuousProjectionField,
               constants: DichotomyConstants) -> ContinuousSystem:
        """First-order system with the supplied (certified) dichotomy data."""
        return ContinuousSystem(self.family, projections, self.second_order.rate, constants,
                                self.g, self.norm, self.second_order.name + "_companion")


def constant_family(M: np.ndarray, name: str = "") -> EvolutionFamily:
    """Closed-form ``T(t, s) = expm((t - s) M)`` for a constant generator ``M``."""
    M = np.asarray(M, dtype=float)

    def T(t, s):
        tau = np.asarray(t, dtype=float) - np.asarray(s, dtype=float)
        flat = tau.reshape(-1)
        return expm(flat[:, None, None] * M).reshape(tau.shape + M.shape)

    def A(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(M, t.shape + M.shape).copy()

    return EvolutionFamily.closed_form(T, M.shape[0], A_eval=A, name=name)


def lift(sys2: SecondOrderSystem, t_max: float | None = None, h: float = 1e-3) -> CompanionSystem:
    """Companion system; constant coefficients use ``expm``, others are integrated up to ``t_max``."""
    k = sys2.dim
    if sys2.constant:
        M = companion_matrix(*[m[0] for m in sys2.coeffs(0.0)])
        family = constant_family(M, sys2.name)
    else:
        if t_max is None:
            raise ValueError("time-dependent coefficients need t_max for the integrated family")

        def C(t):
            return companion_matrix(*[m[0] for m in sys2.coeffs(t)])
        family = integrate_family(C, 2 * k, t_max, h=h)

    def fn(t, W):
        out = np.zeros_like(W)
        out[:, :k] = sys2.forcing(t, W[:, :k], W[:, k:])
        return out

    g = ContinuousNonlinearity(fn, sys2.c, f"lift({sys2.name})" if sys2.f is not None else "zero")
    return CompanionSystem(sys2, family, g, ProductNorm(k))


def lift_pseudo_orbit(grid, y, y_prime=None, y_second=None) -> ContinuousPseudoOrbit:
    """``w = (y', y)`` with ``w' = (y'', y')``; missing derivatives come from differences.

    The difference error of ``y''`` is carried into ``fd_error``.  A
    difference-based ``y'`` is used for both components, so the second block
    of the defect vanishes identically.
    """
    grid = check_grid(grid)
    y = check_trajectory(y, grid.size, name="y")
    fd = np.zeros(grid.size)
    nested = y_prime is None
    if y_prime is None:
        y_prime, e1 = derivative(grid, y)
        fd = fd + e1
    if y_second is None:
        y_second, e2 = derivative(grid, y_prime)
        # a differenced y' doubles the leading error of y''
        fd = fd + (2 * e2 if nested else e2)
    W = np.hstack([y_prime, y])
    Wp = np.hstack([y_second, y_prime])
    return ContinuousPseudoOrbit(grid, W, Wp, fd_error=fd, source="lift")


def extract_shadow(result, dim: int | None = None) -> np.ndarray:
    """Second block of the companion shadow ``x = z2``."""
    X = np.asarray(result.x if hasattr(result, "x") else result, dtype=float)
    k = X.shape[1] // 2 if dim is None else dim
    if X.shape[1] != 2 * k:
        raise ValueError(f"expected a product-space trajectory of width {2 * k}")
    return X[:, k:]


def sine_second_order(A, B, c: float, rate: RatePair | None = None, d: float = 0.0,
                      name: str = "") -> SecondOrderSystem:
    """Constant ``A``, ``B`` with ``f(t, x', x) = c weight(t) sin(x)`` taken componentwise.

    The Lipschitz bound in ``(x', x)`` is ``c weight(t)`` in the product norm.
    """
    rate = make_rate("exponential") if rate is None else rate
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))

    def f(t, X1, X2):
        w = np.asarray(rate.defect_weight(t, d), dtype=float) * np.ones_like(t)
        return c * w[:, None] * np.sin(X2)

    return SecondOrderSystem(A, B, A.shape[0], rate, f, c, d, name)


def damped_oscillator(c: float = 0.005, damping: float = 0.1) -> SecondOrderSystem:
    """``x'' = -damping x' - x + c sin(x)`` with ``mu = e^t``, ``nu = 1``."""
    return sine_second_order([[-damping]], [[-1.0]], c, name="damped_oscillator")


def companion_with_dichotomy(sys2: SecondOrderSystem, lam: float, stable=None, unstable=(),
                             D: float | None = None, t_max: float = 60.0, grid=None):
    """Lift ``sys2`` and attach coordinate projections with ``D`` fitted when not given.

    ``stable`` defaults to every companion coordinate.  Returns
    ``(companion, ContinuousSystem)``.
    """
    comp = lift(sys2, t_max=t_max)
    stable = list(range(comp.dim)) if stable is None else list(stable)
    P = ContinuousProjectionField.coordinate(comp.dim, stable, list(unstable))
    if D is None:
        D = comp.fit_D(P, lam, sys2.d, grid=grid, t_max=t_max)
    return comp, comp.system(P, DichotomyConstants(D, lam, sys2.d))


def damped_oscillator_system(c: float = 0.005, damping: float = 0.1, lam: float = 0.04,
                             t_max: float = 60.0, grid=None):
    """Companion system of :func:`damped_oscillator` with ``P1 = I`` and fitted ``D``.

    Returns ``(second_order, companion, ContinuousSystem)``.
    """
    sys2 = damped_oscillator(c, damping)
    comp, sys = companion_with_dichotomy(sys2, lam, t_max=t_max, grid=grid)
    return sys2, comp, sys


def second_order_check(result, po: ContinuousPseudoOrbit, sys2: SecondOrderSystem,
                       companion_system: ContinuousSystem):
    """Second-order residual of the extracted shadow and its budget on interior nodes.

    ``x'`` and ``x''`` come from repeated central differences of ``x``.  The
    second difference carries ``h^2/6 |x''''|`` from the outer stencil and
    the same again from the error of the inner one.  The budget is twice
    that leading term plus twice the error of ``x'`` through ``A`` and the
    Lipschitz bound of ``f`` (the same safety margin as the companion
    residual budget), plus that budget carried over by the coefficients.
    The two nodes at each end use one-sided stencils whose error estimates
    are unreliable; they are dropped.  Returns ``(nodes, R, budget)``.
    """
    grid = po.grid
    x = extract_shadow(result, sys2.dim)
    xp, e1 = derivative(grid, x)
    xs, e2 = derivative(grid, xp)
    R = sys2.residual(grid, x, xp, xs)
    _, bud = residual_budget(result, po, companion_system)
    A, B = sys2.coeffs(grid)
    nA = np.linalg.norm(A, ord=2, axis=(1, 2))
    nB = np.linalg.norm(B, ord=2, axis=(1, 2))
    lip = sys2.c * np.asarray(sys2.rate.defect_weight(grid, sys2.d), dtype=float) * np.ones_like(grid)
    budget = ((1 + nA + nB + lip) * bud + 4 * e2 + 2 * (nA + lip) * e1
              + 64 * np.finfo(float).eps * (1 + np.linalg.norm(xs, axis=1)))
    inner = np.arange(2, grid.size - 2)
    return inner, R[inner], budget[inner]
