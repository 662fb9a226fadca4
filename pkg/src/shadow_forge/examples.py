"""Catalog of concrete systems with their dichotomy constants.

Continuous entries use closed-form evolution families built from explicit
antiderivatives of diagonal coefficients; :func:`discretize` samples any of
them at integer times.  Each entry carries the sine-type perturbation whose
Lipschitz weight matches its rates, scaled by ``c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .certificate import Certificate
from .exceptions import InvalidSign
from .linear_continuous import (ContinuousProjectionField, EvolutionFamily,
                                certify_dichotomy_continuous, integrate_family)
from .linear_discrete import (DichotomyConstants, DiscreteCocycle, ProjectionField,
                              certify_dichotomy)
from .nonlinearity import ContinuousNonlinearity, sine_nonlinearity, sine_nonlinearity_continuous
from .rates import make_rate, sample_rate
from .systems import ContinuousSystem, DiscreteSystem

DEFAULT_T_MAX = {"exponential": 20.0, "tempered": 20.0, "polynomial": 200.0}
DEFAULT_N = 64


@dataclass
class NamedSystem:
    """A catalog entry: the system, its window and how to rebuild it with another ``c``."""

    name: str
    system: object
    window: float
    note: str = ""
    rebuild: Callable = field(default=None, repr=False)

    @property
    def kind(self) -> str:
        return "discrete" if isinstance(self.system, DiscreteSystem) else "continuous"

    @property
    def constants(self) -> DichotomyConstants:
        return self.system.constants

    def with_c(self, c: float) -> "NamedSystem":
        return self.rebuild(c)

    def certify(self, grid=None, D: float | None = None) -> Certificate:
        """Dichotomy certificate with the catalogued constants (or a given ``D``)."""
        s = self.system
        k = s.constants if D is None else DichotomyConstants(D, s.constants.lam, s.constants.d)
        if self.kind == "discrete":
            return certify_dichotomy(s.cocycle, s.projections, s.rates, k, norm=s.norm)
        return certify_dichotomy_continuous(s.family, s.projections, s.rate, k, grid=grid,
                                            norm=s.norm, t_max=self.window)


def _diag_family(log_entries: Callable, dim: int):
    """Closed-form diagonal family with ``T_ii(t, s) = exp(L_i(t) - L_i(s))``."""
    def T(t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        shape = np.broadcast(t, s).shape
        out = np.zeros(shape + (dim, dim))
        with np.errstate(over="ignore", under="ignore"):
            for i, L in enumerate(log_entries(t, s)):
                out[..., i, i] = np.exp(L)
        return out
    return T


def _diag_generator(entries: Callable, dim: int):
    def A(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (dim, dim))
        for i, a in enumerate(entries(t)):
            out[..., i, i] = a
        return out
    return A


def example_partial_exponential_3d(c: float = 0.0, t_max: float | None = None) -> NamedSystem:
    """``A(t) = diag(-(1+2t), 1+2t, 0)`` with stable, unstable and center coordinates.

    ``T(t,s) = diag(e^{-(t-s)(1+t+s)}, e^{(t-s)(1+t+s)}, 1)``, ``mu = e^t``,
    ``nu = 1``, ``D = lam = 1``, ``d = 0``; ``f(t, x) = c sin|x|`` along the
    unit diagonal.
    """
    if c < 0:
        raise ValueError("c must be >= 0")
    t_max = DEFAULT_T_MAX["exponential"] if t_max is None else float(t_max)

    def logs(t, s):
        e = (t - s) * (1 + t + s)
        return -e, e, np.zeros_like(e)

    A = _diag_generator(lambda t: (-(1 + 2 * t), 1 + 2 * t, np.zeros_like(t)), 3)
    family = EvolutionFamily.closed_form(_diag_family(logs, 3), 3, A_eval=A,
                                         name="partial_exponential_3d")
    rate = make_rate("exponential")
    k = DichotomyConstants(1.0, 1.0, 0.0)
    f = sine_nonlinearity_continuous(c, lambda t: rate.defect_weight(t, k.d))
    sys = ContinuousSystem(family, ContinuousProjectionField.coordinate(3, [0], [1]), rate, k,
                           f, name="partial_exponential_3d")
    return NamedSystem("partial_exponential_3d", sys, t_max,
                       "exponential dichotomy with a one-dimensional center",
                       lambda c2: example_partial_exponential_3d(c2, t_max))


def tempered_generator(t):
    """Derivative of ``-t + sqrt(1+t) cos t``."""
    t = np.asarray(t, dtype=float)
    r = np.sqrt(1 + t)
    return -1 + np.cos(t) / (2 * r) - r * np.sin(t)


def example_tempered_scalar(c: float = 0.0, t_max: float | None = None) -> NamedSystem:
    """Scalar ``T(t,s) = exp(-(t-s) + sqrt(1+t) cos t - sqrt(1+s) cos s)``.

    Stable only (``P1 = 1``), ``mu = e^t``, ``nu = e^{sqrt(1+t)}``,
    ``lam = 1/2``, ``D = 1``, ``d = 2``; ``f(t, x) = c sin(x)/nu(t)^2``.
    """
    if c < 0:
        raise ValueError("c must be >= 0")
    t_max = DEFAULT_T_MAX["tempered"] if t_max is None else float(t_max)

    def L(t):
        return -t + np.sqrt(1 + t) * np.cos(t)

    family = EvolutionFamily.closed_form(
        _diag_family(lambda t, s: (L(t) - L(s),), 1), 1,
        A_eval=_diag_generator(lambda t: (tempered_generator(t),), 1), name="tempered_scalar")
    rate = make_rate("tempered_custom", {"a": 1.0, "nu": "exp_sqrt"})
    k = DichotomyConstants(1.0, 0.5, 2.0)

    def fn(t, X):
        w = np.asarray(rate.defect_weight(t, k.d), dtype=float) * np.ones(np.shape(t))
        return c * w[:, None] * np.sin(X)
    f = ContinuousNonlinearity(fn, c, f"sine(c={c:g})")
    P = ContinuousProjectionField(np.eye(1), np.zeros((1, 1)))
    sys = ContinuousSystem(family, P, rate, k, f, name="tempered_scalar")
    return NamedSystem("tempered_scalar", sys, t_max,
                       "nonuniform (tempered) contraction, no center",
                       lambda c2: example_tempered_scalar(c2, t_max))


def example_polynomial_2d(a: float = -1.0, b: float = 0.5, d: float = 1.0, c: float = 0.0,
                          t_max: float | None = None) -> NamedSystem:
    """Diagonal system with polynomial dichotomy, ``mu = nu = 1 + t``.

    ``a(t) = a/(t+1) + d (cos t - 1)/(2(t+1)) - (d/2) ln(1+t) sin t`` and
    ``b(t)`` with ``b`` in place of ``a`` and the oscillating terms negated,
    so that ``int_0^t a = a ln(1+t) + (d/2) ln(1+t)(cos t - 1)``.
    ``D = 1``, ``lam = min(-a, b)``; ``f(t, x) = c sin|x| / (1+t)^{d+1}``.
    """
    if a >= 0 or b < 0:
        raise InvalidSign(f"need a < 0 <= b, got a={a}, b={b}")
    if not d > 0:
        raise ValueError(f"need d > 0, got {d}")
    if c < 0:
        raise ValueError("c must be >= 0")
    lam = min(-a, b)
    if not lam > 0:
        raise InvalidSign(f"lambda = min(-a, b) = {lam} must be positive")
    t_max = DEFAULT_T_MAX["polynomial"] if t_max is None else float(t_max)

    def osc(t):
        return 0.5 * d * np.log1p(t) * (np.cos(t) - 1)

    def logs(t, s):
        return (a * (np.log1p(t) - np.log1p(s)) + osc(t) - osc(s),
                b * (np.log1p(t) - np.log1p(s)) - osc(t) + osc(s))

    def coeffs(t):
        lo = 0.5 * d * (np.cos(t) - 1) / (t + 1) - 0.5 * d * np.log1p(t) * np.sin(t)
        return a / (t + 1) + lo, b / (t + 1) - lo

    family = EvolutionFamily.closed_form(_diag_family(logs, 2), 2,
                                         A_eval=_diag_generator(coeffs, 2), name="polynomial_2d")
    rate = make_rate("polynomial", {"mu_power": 1.0, "nu_power": 1.0})
    k = DichotomyConstants(1.0, lam, d)
    f = sine_nonlinearity_continuous(c, lambda t: rate.defect_weight(t, d))
    P = ContinuousProjectionField.coordinate(2, [0], [1])
    sys = ContinuousSystem(family, P, rate, k, f, name="polynomial_2d")
    return NamedSystem("polynomial_2d", sys, t_max, "polynomial dichotomy, no center",
                       lambda c2: example_polynomial_2d(a, b, d, c2, t_max))


def example_discrete_diagonal(rho_s: float = 0.5, rho_u: float = 2.0, N: int = DEFAULT_N,
                              c: float = 0.0) -> NamedSystem:
    """``A_n = diag(rho_s, rho_u)`` with ``mu_n = e^n``, ``lam = min(-ln rho_s, ln rho_u)``, ``D = 1``.

    ``f_n(x) = c w_n sin|x| (1, 1)/sqrt 2`` with the step weights ``w_n``.
    """
    if not (0 < rho_s < 1 < rho_u):
        raise ValueError(f"need 0 < rho_s < 1 < rho_u, got {rho_s}, {rho_u}")
    if c < 0:
        raise ValueError("c must be >= 0")
    lam = min(-np.log(rho_s), np.log(rho_u))
    k = DichotomyConstants(1.0, float(lam), 0.0)
    A = np.diag([rho_s, rho_u])

    def build(horizon):
        cocycle = DiscreteCocycle(np.tile(A, (horizon, 1, 1)), generator=lambda n: A)
        proj = ProjectionField.coordinate(2, [0], [1], horizon + 1)
        rates = sample_rate(make_rate("exponential"), horizon + 1)
        f = sine_nonlinearity(c, _weights_fn(rates.source, k))
        return DiscreteSystem(cocycle, proj, rates, k, f, name="discrete_diagonal",
                              extender=build)
    return NamedSystem("discrete_diagonal", build(N), N,
                       "constant hyperbolic diagonal map",
                       lambda c2: example_discrete_diagonal(rho_s, rho_u, N, c2))


def _weights_fn(rate, k):
    """Step weights ``w_n`` for any index array, from the rate formulas."""
    def w(idx):
        n = np.asarray(idx, dtype=float)
        lm0, lm1 = rate.log_mu(n), rate.log_mu(n + 1)
        return -np.expm1(k.lam * (lm0 - lm1)) * np.exp(-k.d * rate.log_nu(n))
    return w


def discretize(entry: NamedSystem, N: int, c: float | None = None) -> NamedSystem:
    """Sample a continuous entry at integer times: ``A_n = T(n+1, n)``, ``mu_n = mu(n)``.

    The dichotomy constants carry over; the perturbation becomes
    ``f_n(x) = c w_n sin|x| (1, ..., 1)/sqrt(dim)`` with the discrete step weights.
    """
    s = entry.system
    if not isinstance(s, ContinuousSystem):
        raise ValueError("discretize expects a continuous entry")
    c = s.c if c is None else c
    k = s.constants
    fam, P = s.family, s.projections

    def build(horizon):
        n = np.arange(horizon, dtype=float)
        A = fam.T_many(n + 1, n)
        Pn = P.at(np.arange(horizon + 1, dtype=float))
        cocycle = DiscreteCocycle(A, generator=lambda m: fam.T(m + 1.0, float(m)))
        proj = ProjectionField(Pn[0], Pn[1], Pn[2])
        rates = sample_rate(s.rate, horizon + 1)
        f = sine_nonlinearity(c, _weights_fn(s.rate, k))
        return DiscreteSystem(cocycle, proj, rates, k, f, norm=s.norm,
                              name=f"{entry.name}_sampled", extender=build)
    return NamedSystem(f"{entry.name}_sampled", build(N), N,
                       f"{entry.name} sampled at integer times",
                       lambda c2: discretize(entry, N, c2))


def integrated_version(entry: NamedSystem, h: float = 1e-3) -> EvolutionFamily:
    """The family of a continuous entry re-derived by integrating its generator."""
    fam = entry.system.family
    return integrate_family(fam.A_eval, fam.dim, entry.window, h)


CATALOG = {
    "partial_exponential_3d": example_partial_exponential_3d,
    "tempered_scalar": example_tempered_scalar,
    "polynomial_2d": example_polynomial_2d,
    "discrete_diagonal": example_discrete_diagonal,
}


def get_example(name: str, **params) -> NamedSystem:
    """Build a catalog entry by name; ``<name>_sampled`` discretizes a continuous one."""
    sampled = name.endswith("_sampled")
    base = name[: -len("_sampled")] if sampled else name
    if base not in CATALOG:
        raise KeyError(f"unknown catalog entry {name!r}; available: {sorted(CATALOG)}")
    if sampled:
        N = int(params.pop("N", 12))
        c = params.pop("c", 0.0)
        return discretize(CATALOG[base](**params), N, c)
    return CATALOG[base](**params)
