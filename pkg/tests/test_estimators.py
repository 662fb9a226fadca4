import numpy as np
import pytest
from sklearn.base import clone

from shadow_forge.estimators import ContinuousShadowing, DiscreteShadowing
from shadow_forge.examples import example_partial_exponential_3d
from shadow_forge.pseudo_orbits import bump, impulse


def test_discrete_params_and_clone(diag_system):
    est = DiscreteShadowing(diag_system, tol=1e-10)
    params = est.get_params()
    assert params["tol"] == 1e-10 and params["system"] is diag_system
    twin = clone(est)
    assert twin.get_params()["tol"] == 1e-10
    assert not hasattr(twin, "result_")


def test_discrete_fit_transform(diag_system):
    po = impulse(diag_system, 1e-3, index=9)
    est = DiscreteShadowing(diag_system)
    x = est.fit_transform(po.y)
    assert est.certificate_.overall
    assert est.delta_ == pytest.approx(1e-3)
    assert np.abs(x - po.y).max() <= est.result_.C * est.delta_
    assert -1.0 <= est.score(po.y) <= 0.0


def test_discrete_transform_new_data(diag_system):
    est = DiscreteShadowing(diag_system).fit(impulse(diag_system, 1e-3, index=9).y)
    other = impulse(diag_system, 1e-3, index=20).y
    assert not np.array_equal(est.transform(other), est.result_.x)


def test_unfitted_and_missing_system():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        DiscreteShadowing().transform(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        DiscreteShadowing().fit(np.zeros((3, 2)))


def test_continuous_estimator():
    sys = example_partial_exponential_3d(c=0.05, t_max=3.0).system
    grid = np.linspace(0, 3.0, 1501)
    po = bump(sys, grid, 1e-3, center=1.0, width=0.3)
    est = ContinuousShadowing(sys, grid=grid)
    x = est.fit(po.y, y_prime=po.y_prime).transform(po.y)
    assert est.certificate_.overall
    assert np.array_equal(x, est.result_.x)
    est2 = ContinuousShadowing(sys).fit(po)
    assert np.allclose(est2.transform(po), x, atol=1e-12)
