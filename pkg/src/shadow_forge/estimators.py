"""scikit-learn style wrappers: fit on a pseudo-orbit, transform to its shadow."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .shadow_continuous import (ContinuousPseudoOrbit, QuadraturePolicy,
                                solve_shadow_continuous, verify_shadow_continuous)
from .shadow_discrete import (DEFAULT_TOL, MAX_ITER, TruncationPolicy, solve_shadow,
                              verify_shadow)


class DiscreteShadowing(TransformerMixin, BaseEstimator):
    """Shadow of a discrete pseudo-orbit ``X`` of shape ``(N + 1, dim)``.

    After :meth:`fit`, ``result_`` holds the solver output and
    ``certificate_`` the verified conclusions; :meth:`transform` returns the
    shadow ``x``.
    """

    def __init__(self, system=None, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                 truncation: str = "finite_horizon", verify: bool = True):
        self.system = system
        self.tol = tol
        self.max_iter = max_iter
        self.truncation = truncation
        self.verify = verify

    def fit(self, X, y=None):
        if self.system is None:
            raise ValueError("DiscreteShadowing needs a system")
        X = np.asarray(X, dtype=float)
        self.result_ = solve_shadow(X, self.system, tol=self.tol, max_iter=self.max_iter,
                                    trunc=TruncationPolicy(self.truncation))
        self.certificate_ = verify_shadow(self.result_, self.system) if self.verify else None
        self.delta_ = self.result_.delta
        self.n_iter_ = self.result_.iterations
        self._fitted_on = X.copy()
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        X = np.asarray(X, dtype=float)
        if X.shape != self._fitted_on.shape or not np.array_equal(X, self._fitted_on):
            return solve_shadow(X, self.system, tol=self.tol, max_iter=self.max_iter,
                                trunc=TruncationPolicy(self.truncation)).x
        return self.result_.x

    def score(self, X, y=None) -> float:
        """Negative ``sup |x - y| / (C delta)``; at least ``-1`` whenever the bound holds."""
        x = self.transform(X)
        dist = np.linalg.norm(x - np.asarray(X, dtype=float), axis=1).max()
        bound = self.result_.C * self.result_.delta
        return -float(dist / bound) if bound > 0 else -float(dist)


class ContinuousShadowing(TransformerMixin, BaseEstimator):
    """Shadow of grid values ``X`` of a pseudo-trajectory on ``grid``.

    ``y_prime`` may be passed to :meth:`fit`; otherwise it is formed by
    differences and its error is charged to the defect.
    """

    def __init__(self, system=None, grid=None, tol: float = DEFAULT_TOL,
                 max_iter: int = MAX_ITER, quadrature_tol: float | None = None,
                 truncation: str = "finite_horizon", verify: bool = True):
        self.system = system
        self.grid = grid
        self.tol = tol
        self.max_iter = max_iter
        self.quadrature_tol = quadrature_tol
        self.truncation = truncation
        self.verify = verify

    def _solve(self, X, y_prime=None):
        if isinstance(X, ContinuousPseudoOrbit):
            po = X
        else:
            if self.grid is None:
                raise ValueError("ContinuousShadowing needs a grid for array input")
            po = ContinuousPseudoOrbit(np.asarray(self.grid, dtype=float),
                                       np.asarray(X, dtype=float), y_prime)
        quad = QuadraturePolicy(self.quadrature_tol, True, TruncationPolicy(self.truncation))
        return po, solve_shadow_continuous(po, self.system, tol=self.tol,
                                           max_iter=self.max_iter, quad=quad)

    def fit(self, X, y=None, y_prime=None):
        if self.system is None:
            raise ValueError("ContinuousShadowing needs a system")
        self.pseudo_orbit_, self.result_ = self._solve(X, y_prime)
        self.certificate_ = (verify_shadow_continuous(self.result_, self.pseudo_orbit_,
                                                      self.system) if self.verify else None)
        self.delta_ = self.result_.delta
        self.n_iter_ = self.result_.iterations
        return self

    def transform(self, X, y_prime=None):
        check_is_fitted(self, "result_")
        if X is self.pseudo_orbit_:
            return self.result_.x
        Y = X.y if isinstance(X, ContinuousPseudoOrbit) else np.asarray(X, dtype=float)
        if Y.shape == self.pseudo_orbit_.y.shape and np.array_equal(Y, self.pseudo_orbit_.y):
            return self.result_.x
        return self._solve(X, y_prime)[1].x
