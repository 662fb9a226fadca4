"""Containers bundling linear part, projections, rates, constants and perturbation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._chain import NodeChain
from .exceptions import ShapeMismatch
from .linear_continuous import (ContinuousProjectionField, EvolutionFamily, _batch,
                                build_chain_continuous)
from .linear_discrete import (DichotomyConstants, DiscreteCocycle, ProjectionField,
                              build_chain)
from .nonlinearity import ContinuousNonlinearity, Nonlinearity
from .norms import EuclideanNorm
from .rates import RatePair, RateSequence


@dataclass
class DiscreteSystem:
    """``x_{n+1} = A_n x_n + f_n(x_n)`` on the window ``[0, N]``."""

    cocycle: DiscreteCocycle
    projections: ProjectionField
    rates: RateSequence
    constants: DichotomyConstants
    f: Nonlinearity = field(default_factory=Nonlinearity.zero)
    norm: object = field(default_factory=EuclideanNorm)
    name: str = ""
    # optional callable horizon -> DiscreteSystem valid beyond N (same data on [0, N])
    extender: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        N = self.cocycle.horizon
        if len(self.projections) < N + 1:
            raise ShapeMismatch(f"projections cover {len(self.projections)} indices, need {N + 1}")
        if self.projections.dim != self.cocycle.dim:
            raise ShapeMismatch("projection and cocycle dimensions differ")
        if len(self.rates) < N + 2:
            self.rates = self.rates.extended(N + 1)
        self._chain = None

    @property
    def horizon(self) -> int:
        return self.cocycle.horizon

    @property
    def dim(self) -> int:
        return self.cocycle.dim

    @property
    def c(self) -> float:
        return self.f.lipschitz_c

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.horizon + 1, dtype=float)

    @property
    def weights(self) -> np.ndarray:
        """Step weights ``(mu_{n+1}^lam - mu_n^lam)/(mu_{n+1}^lam nu_n^d)``, ``n < N``."""
        k = self.constants
        return self.rates.weights(k.lam, k.d)[:self.horizon]

    @property
    def chain(self) -> NodeChain:
        if self._chain is None:
            self._chain = build_chain(self.cocycle, self.projections, self.rates,
                                      lam=self.constants.lam, norm=self.norm)
        return self._chain

    def step(self, X) -> np.ndarray:
        """``A_n x_n + f_n(x_n)`` for ``n = 0..N-1`` given states ``X[0..N-1]``."""
        X = np.asarray(X, dtype=float)
        n = np.arange(X.shape[0])
        return np.einsum("nij,nj->ni", self.cocycle.A[:X.shape[0]], X) + self.f.batch(n, X)

    def with_nonlinearity(self, f: Nonlinearity) -> "DiscreteSystem":
        ext = None
        if self.extender is not None:
            ext = lambda h: self.extender(h).with_nonlinearity(f)
        return DiscreteSystem(self.cocycle, self.projections, self.rates, self.constants,
                              f, self.norm, self.name, ext)

    def extended(self, horizon: int) -> "DiscreteSystem":
        if self.extender is None:
            raise ValueError("this system has no generator beyond its window")
        return self.extender(horizon)

    def truncated(self, horizon: int) -> "DiscreteSystem":
        return DiscreteSystem(self.cocycle.truncated(horizon),
                              self.projections.truncated(horizon + 1), self.rates,
                              self.constants, self.f, self.norm, self.name, self.extender)


@dataclass
class ContinuousSystem:
    """``x' = A(t) x + f(t, x)`` with a dichotomy of ``x' = A(t) x``."""

    family: EvolutionFamily
    projections: ContinuousProjectionField
    rate: RatePair
    constants: DichotomyConstants
    f: ContinuousNonlinearity = field(default_factory=ContinuousNonlinearity.zero)
    norm: object = field(default_factory=EuclideanNorm)
    name: str = ""

    def __post_init__(self):
        if self.projections.dim != self.family.dim:
            raise ShapeMismatch("projection and family dimensions differ")
        self._chains = {}

    @property
    def dim(self) -> int:
        return self.family.dim

    @property
    def c(self) -> float:
        return self.f.lipschitz_c

    def A(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.family.A_eval is None:
            raise ValueError("the evolution family has no generator A(t)")
        return _batch(self.family.A_eval, t, self.dim)

    def weight(self, t) -> np.ndarray:
        """Defect weight ``mu'(t)/(mu(t) nu(t)^d)``."""
        t = np.asarray(t, dtype=float)
        return np.asarray(self.rate.defect_weight(t, self.constants.d), dtype=float) * np.ones_like(t)

    def vector_field(self, t, X) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        X = np.asarray(X, dtype=float).reshape(t.size, self.dim)
        return np.einsum("nij,nj->ni", self.A(t), X) + self.f.batch(t, X)

    def chain(self, grid) -> NodeChain:
        grid = np.asarray(grid, dtype=float)
        key = (grid.size, float(grid[0]), float(grid[-1]), hash(grid.tobytes()))
        if key not in self._chains:
            self._chains = {key: build_chain_continuous(self.family, self.projections,
                                                        self.rate, grid, self.norm)}
        return self._chains[key]

    def with_nonlinearity(self, f: ContinuousNonlinearity) -> "ContinuousSystem":
        return ContinuousSystem(self.family, self.projections, self.rate, self.constants,
                                f, self.norm, self.name)
