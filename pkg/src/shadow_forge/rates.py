"""Growth and nonuniformity rates.

A dichotomy is measured on the scale of a growth rate ``mu`` (strictly
increasing, ``mu(0) = 1``, unbounded) and a nonuniformity rate ``nu >= 1``.
:class:`RatePair` holds closed-form evaluators for continuous time and
:class:`RateSequence` the sampled values used in discrete time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import InvalidRateParams

T_MAX = 1e3
# validation windows: the fixed-step central difference on e^t drifts past
# 1e-6 relative error beyond t ~ 245
DEFAULT_T_MAX = {"exponential": 50.0, "tempered_custom": 50.0,
                 "polynomial": T_MAX, "user_defined": T_MAX}
KINDS = ("exponential", "polynomial", "tempered_custom", "user_defined")

# named nu profiles usable from JSON configs
NU_PROFILES: dict[str, Callable] = {
    "one": lambda t: np.ones_like(np.asarray(t, dtype=float)),
    "exp_sqrt": lambda t: np.exp(np.sqrt(1.0 + np.asarray(t, dtype=float))),
    "linear": lambda t: 1.0 + np.asarray(t, dtype=float),
}


@dataclass(frozen=True)
class RatePair:
    """Closed-form rates ``mu``, ``mu'`` and ``nu``.

    The evaluators must accept numpy arrays.  Construction does not validate;
    use :func:`make_rate` (which does) or :func:`validate_rate`.
    """

    mu: Callable
    mu_prime: Callable
    nu: Callable
    kind: str = "user_defined"
    params: dict = field(default_factory=dict, compare=False)

    def log_mu(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind in ("exponential", "tempered_custom"):
            return self.params.get("a", 1.0) * t
        return np.log(self.mu(t))

    def log_ratio(self, t, s):
        """``ln(mu(t)/mu(s))`` without forming overflowing quotients."""
        return self.log_mu(t) - self.log_mu(s)

    def log_nu(self, t):
        t = np.asarray(t, dtype=float)
        name = self.params.get("nu_name")
        if name == "exp_sqrt":
            return np.sqrt(1.0 + t)
        if name == "one":
            return np.zeros_like(t)
        return np.log(self.nu(t))

    def defect_weight(self, t, d: float):
        """``mu'(t) / (mu(t) nu(t)^d)``: weight in the Lipschitz and defect bounds."""
        t = np.asarray(t, dtype=float)
        return self.mu_prime(t) / self.mu(t) * np.exp(-d * self.log_nu(t))

    def center_weight(self, t):
        """``mu(t) / mu'(t)``, the adapted norm on the center fiber."""
        t = np.asarray(t, dtype=float)
        return self.mu(t) / self.mu_prime(t)


def _exponential(params):
    a = float(params.get("a", 1.0))
    if not a > 0:
        raise InvalidRateParams(f"exponential rate needs a > 0, got {a}")
    return RatePair(lambda t: np.exp(a * np.asarray(t, dtype=float)),
                    lambda t: a * np.exp(a * np.asarray(t, dtype=float)),
                    NU_PROFILES["one"], "exponential",
                    {"a": a, "nu_name": "one"})


def _polynomial(params):
    p = float(params.get("mu_power", 1.0))
    k = float(params.get("nu_power", 1.0))
    if not p > 0:
        raise InvalidRateParams(f"polynomial mu needs a positive exponent, got {p}")
    if k < 0:
        raise InvalidRateParams(f"polynomial nu needs a nonnegative exponent, got {k}")
    return RatePair(lambda t: (1.0 + np.asarray(t, dtype=float)) ** p,
                    lambda t: p * (1.0 + np.asarray(t, dtype=float)) ** (p - 1.0),
                    lambda t: (1.0 + np.asarray(t, dtype=float)) ** k,
                    "polynomial", {"mu_power": p, "nu_power": k})


def _tempered(params):
    a = float(params.get("a", 1.0))
    nu = params.get("nu", "exp_sqrt")
    nu_name = None
    if isinstance(nu, str):
        if nu not in NU_PROFILES:
            raise InvalidRateParams(f"unknown nu profile {nu!r}")
        nu_name, nu = nu, NU_PROFILES[nu]
    if not callable(nu):
        raise InvalidRateParams("tempered_custom needs a callable or named nu")
    base = _exponential({"a": a})
    return RatePair(base.mu, base.mu_prime, nu, "tempered_custom",
                    {"a": a, "nu_name": nu_name})


def _user_defined(params):
    try:
        mu, mu_prime, nu = params["mu"], params["mu_prime"], params["nu"]
    except KeyError as exc:
        raise InvalidRateParams(f"user_defined rate is missing {exc}") from None
    if not all(callable(g) for g in (mu, mu_prime, nu)):
        raise InvalidRateParams("user_defined rates must be callables")
    return RatePair(mu, mu_prime, nu, "user_defined", {})


_BUILDERS = {
    "exponential": _exponential,
    "polynomial": _polynomial,
    "tempered_custom": _tempered,
    "user_defined": _user_defined,
}


def make_rate(kind: str, params: dict | None = None, t_max: float | None = None) -> RatePair:
    """Build a validated :class:`RatePair`.

    ``exponential``: ``mu = e^{a t}``, ``nu = 1``.  ``polynomial``:
    ``mu = (1+t)^mu_power``, ``nu = (1+t)^nu_power`` (both default to 1).
    ``tempered_custom``: ``mu = e^{a t}`` with a supplied ``nu`` (callable or
    one of :data:`NU_PROFILES`).  ``user_defined``: callables ``mu``,
    ``mu_prime``, ``nu``.

    Raises :class:`InvalidRateParams` if any invariant fails on the default
    validation grid over ``[0, t_max]`` (default per kind, see
    :data:`DEFAULT_T_MAX`).
    """
    if kind not in _BUILDERS:
        raise InvalidRateParams(f"unknown rate kind {kind!r}; expected one of {KINDS}")
    rate = _BUILDERS[kind](dict(params or {}))
    if t_max is None:
        t_max = DEFAULT_T_MAX[kind]
    report = validate_rate(rate, default_grid(rate, t_max))
    if not report.ok:
        bad = ", ".join(f"{r.name} (worst {r.worst_violation:.3g} at t={r.where})"
                        for r in report.failures())
        raise InvalidRateParams(f"rate {kind!r} violates: {bad}")
    return rate


def default_grid(rate: RatePair, t_max: float = T_MAX, n: int = 401) -> np.ndarray:
    """Uniform grid on ``[0, t_max]``, shortened to where ``mu`` stays finite."""
    hi = float(t_max)
    with np.errstate(over="ignore", invalid="ignore"):
        while hi > 1e-6 and not np.all(np.isfinite(rate.mu(np.array([hi]))) &
                                       (np.abs(rate.mu(np.array([hi]))) < 1e300)):
            hi *= 0.5
    return np.linspace(0.0, hi, n)


@dataclass
class InvariantResult:
    name: str
    passed: bool
    worst_violation: float
    where: float | None = None

    def to_dict(self):
        return {"name": self.name, "pass": self.passed,
                "worst_violation": self.worst_violation, "where": self.where}


@dataclass
class ValidationReport:
    results: list[InvariantResult]

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[InvariantResult]:
        return [r for r in self.results if not r.passed]

    def __getitem__(self, name: str) -> InvariantResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self):
        return {"ok": self.ok, "results": [r.to_dict() for r in self.results]}


def _worst(violation, grid):
    violation = np.asarray(violation, dtype=float)
    if violation.size == 0:
        return InvariantResult("", True, 0.0, None)
    violation = np.where(np.isnan(violation), np.inf, violation)
    i = int(np.argmax(violation))
    v = float(violation[i])
    return InvariantResult("", v <= 0.0, max(v, 0.0), float(grid[i]))


def validate_rate(rate: RatePair, grid, growth_threshold: float = 2.0,
                  fd_rel_tol: float = 1e-6) -> ValidationReport:
    """Check the standing assumptions on ``rate`` at the points of ``grid``.

    Failures are reported, not raised.  Checked: ``mu(0) = 1`` (when 0 is on
    the grid), strict monotonicity, growth beyond ``growth_threshold`` at the
    last point, ``nu >= 1``, ``mu' > 0`` and agreement of ``mu'`` with a
    central difference at interior points.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] < 0:
        raise ValueError("grid must lie in [0, inf)")

    with np.errstate(over="ignore", invalid="ignore"):
        mu = np.asarray(rate.mu(grid), dtype=float) * np.ones_like(grid)
        mup = np.asarray(rate.mu_prime(grid), dtype=float) * np.ones_like(grid)
        nu = np.asarray(rate.nu(grid), dtype=float) * np.ones_like(grid)

    results = []

    r = InvariantResult("mu(0)=1", True, 0.0, None)
    if grid[0] == 0.0:
        v = abs(mu[0] - 1.0)
        r = InvariantResult("mu(0)=1", bool(v <= 1e-12), float(v), 0.0)
    results.append(r)

    r = _worst(mu[:-1] - mu[1:] if grid.size > 1 else [], grid[:-1])
    # strictness: equal neighbours count as a violation of size 0+
    if grid.size > 1 and np.any(mu[1:] <= mu[:-1]):
        r.passed = False
    r.name = "mu strictly increasing"
    results.append(r)

    last = float(mu[-1])
    ok = grid[-1] == 0.0 or last > growth_threshold
    results.append(InvariantResult("mu grows", bool(ok),
                                   0.0 if ok else float(growth_threshold - last),
                                   float(grid[-1])))

    r = _worst(1.0 - nu, grid)
    r.name = "nu >= 1"
    results.append(r)

    r = _worst(-mup, grid)
    if np.any(mup <= 0) or np.any(~np.isfinite(mup)):
        r.passed = False
    r.name = "mu' > 0"
    results.append(r)

    interior = grid[grid > 0]
    if interior.size:
        h = 1e-5 * np.maximum(1.0, interior)
        with np.errstate(over="ignore", invalid="ignore"):
            fd = (rate.mu(interior + h) - rate.mu(interior - h)) / (2 * h)
            mp = np.asarray(rate.mu_prime(interior), dtype=float) * np.ones_like(interior)
            rel = np.abs(mp - fd) / np.abs(mp)
        rel = np.where(np.isfinite(rel), rel, np.inf)
        i = int(np.argmax(rel))
        results.append(InvariantResult("mu' matches finite difference",
                                       bool(np.all(rel <= fd_rel_tol)),
                                       float(rel[i]), float(interior[i])))
    else:
        results.append(InvariantResult("mu' matches finite difference", True, 0.0))

    return ValidationReport(results)


def is_tempered(rate: RatePair, t: float = 1e4, tol: float = 0.1) -> bool:
    """Spot check ``(1/t) ln nu(t) -> 0`` at a single large ``t``."""
    return bool(float(rate.log_nu(np.array([t]))[0]) / t < tol)


class RateSequence:
    """Sampled rates ``mu_n``, ``nu_n`` for ``n = 0, ..., len-1``."""

    def __init__(self, mu_seq, nu_seq, source: RatePair | None = None):
        mu = np.asarray(mu_seq, dtype=float)
        nu = np.asarray(nu_seq, dtype=float)
        if mu.ndim != 1 or mu.shape != nu.shape or mu.size < 2:
            raise InvalidRateParams("mu and nu must be 1-d sequences of equal length >= 2")
        if not np.all(np.isfinite(mu)) or not np.all(np.isfinite(nu)):
            raise InvalidRateParams("rate sequences must be finite")
        if mu[0] < 1.0:
            raise InvalidRateParams(f"mu_0 must be >= 1, got {mu[0]}")
        if np.any(np.diff(mu) <= 0):
            n = int(np.argmax(np.diff(mu) <= 0))
            raise InvalidRateParams(f"mu must be strictly increasing (fails at n={n})")
        if np.any(nu < 1.0):
            raise InvalidRateParams(f"nu must be >= 1 (fails at n={int(np.argmax(nu < 1))})")
        self.mu = mu
        self.nu = nu
        self.source = source
        self.mu.flags.writeable = False
        self.nu.flags.writeable = False

    def __len__(self):
        return self.mu.size

    @property
    def log_mu(self):
        return np.log(self.mu)

    def step_fraction(self, lam: float) -> np.ndarray:
        """``(mu_{n+1}^lam - mu_n^lam) / mu_{n+1}^lam`` for ``n = 0..len-2``."""
        lm = self.log_mu
        return -np.expm1(lam * (lm[:-1] - lm[1:]))

    def weights(self, lam: float, d: float) -> np.ndarray:
        """Defect and Lipschitz weights ``(mu_{n+1}^lam - mu_n^lam)/(mu_{n+1}^lam nu_n^d)``."""
        return self.step_fraction(lam) / self.nu[:-1] ** d

    def center_weights(self, lam: float) -> np.ndarray:
        """``mu_{n+1}^lam / (mu_{n+1}^lam - mu_n^lam)`` for ``n = 0..len-2``."""
        frac = self.step_fraction(lam)
        if np.any(frac <= 0):
            raise InvalidRateParams("degenerate center weight: mu not strictly increasing")
        return 1.0 / frac

    def extended(self, n_max: int) -> "RateSequence":
        if n_max + 1 <= len(self):
            return self
        if self.source is None:
            raise InvalidRateParams("cannot extend a rate sequence without a generator")
        return sample_rate(self.source, n_max)

    def __repr__(self):
        return f"RateSequence(len={len(self)}, mu=[{self.mu[0]:.3g}..{self.mu[-1]:.3g}])"


def sample_rate(rate: RatePair, n_max: int) -> RateSequence:
    """``mu_n = mu(n)``, ``nu_n = nu(n)`` for ``n = 0, ..., n_max``."""
    if int(n_max) < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    n = np.arange(int(n_max) + 1, dtype=float)
    with np.errstate(over="ignore"):
        mu = np.asarray(rate.mu(n), dtype=float) * np.ones_like(n)
        nu = np.asarray(rate.nu(n), dtype=float) * np.ones_like(n)
    return RateSequence(mu, nu, source=rate)
