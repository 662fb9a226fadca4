import numpy as np
import pytest
from hypothesis import given, strategies as st

from shadow_forge.examples import (example_partial_exponential_3d, example_polynomial_2d,
                                   example_tempered_scalar, integrated_version)
from shadow_forge.exceptions import StepTooCoarse
from shadow_forge.linear_continuous import (ContinuousProjectionField,
                                            certify_dichotomy_continuous, default_cert_grid,
                                            integrate_family)
from shadow_forge.linear_discrete import DichotomyConstants
from shadow_forge.rates import make_rate


def test_zero_generator_gives_identity():
    F = integrate_family(lambda t: np.zeros((2, 2)), 2, 5.0, h=1e-2)
    assert np.allclose(F.T(3.3, 1.1), np.eye(2), atol=1e-14)
    assert np.allclose(F.T(2.0, 2.0), np.eye(2), atol=1e-10)


def test_scalar_decay():
    F = integrate_family(lambda t: np.array([[-1.0]]), 1, 10.0, h=1e-3)
    for t, s in [(1.0, 0.0), (7.5, 2.25), (3.0, 9.0)]:
        assert F.T(t, s)[0, 0] == pytest.approx(np.exp(-(t - s)), rel=1e-8)


def test_tempered_family_matches_closed_form():
    entry = example_tempered_scalar(t_max=20.0)
    F = integrated_version(entry, h=1e-3)
    for t, s in [(5.0, 1.0), (12.3, 4.4), (19.0, 0.5)]:
        exact = np.exp(-(t - s) + np.sqrt(1 + t) * np.cos(t) - np.sqrt(1 + s) * np.cos(s))
        assert F.T(t, s)[0, 0] == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("make", [example_partial_exponential_3d, example_polynomial_2d])
def test_integrated_agrees_with_closed_form(make):
    entry = make(t_max=10.0)
    F = integrated_version(entry, h=1e-3)
    G = entry.system.family
    P1 = entry.system.projections.at(np.array([0.0]))[0][0]
    for t, s in [(2.0, 0.0), (6.5, 3.0), (9.0, 8.5)]:
        assert np.allclose(F.T(t, s) @ P1, G.T(t, s) @ P1, rtol=1e-6, atol=1e-12)


def test_composition_law_integrated():
    F = integrate_family(lambda t: np.array([[np.sin(t), 1.0], [-1.0, -0.2]]), 2, 8.0, h=1e-3)
    rng = np.random.default_rng(0)
    for _ in range(10):
        r, s, t = np.sort(rng.uniform(0, 8, 3))
        lhs = F.T(t, s) @ F.T(s, r)
        assert np.allclose(lhs, F.T(t, r), rtol=1e-6, atol=1e-12)
    assert F.composition_error() <= 1e-6


def test_step_too_coarse():
    with pytest.raises(StepTooCoarse):
        integrate_family(lambda t: np.array([[0.0, 40.0], [-40.0, 0.0]]), 2, 5.0, h=0.2)


def test_catalog_certificates():
    e = example_partial_exponential_3d()
    assert e.constants == DichotomyConstants(1.0, 1.0, 0.0)
    assert e.certify().overall
    t = example_tempered_scalar()
    assert t.constants == DichotomyConstants(1.0, 0.5, 2.0)
    assert t.certify().overall
    p = example_polynomial_2d(-1.0, 0.5)
    assert p.constants.D == 1.0 and p.constants.lam == 0.5
    assert p.certify().overall


def test_default_grid_is_even_in_log_mu():
    r = make_rate("exponential")
    g = default_cert_grid(r, 50.0)
    assert g.size == 200 and g[0] == 0.0 and g[-1] == pytest.approx(50.0)
    assert np.allclose(np.diff(np.log(r.mu(g))), np.log(r.mu(g[-1])) / 199)


@given(st.floats(1.0, 10.0))
def test_certificate_monotone_in_D(D):
    e = example_partial_exponential_3d(t_max=8.0)
    s = e.system
    grid = np.linspace(0, 8, 40)
    k = DichotomyConstants(D, 1.0, 0.0)
    assert certify_dichotomy_continuous(s.family, s.projections, s.rate, k, grid=grid).overall


def test_wrong_lambda_fails():
    e = example_partial_exponential_3d(t_max=8.0)
    s = e.system
    k = DichotomyConstants(1.0, 3.0, 0.0)
    grid = np.linspace(0, 8, 40)
    assert not certify_dichotomy_continuous(s.family, s.projections, s.rate, k, grid=grid).overall


def test_coordinate_projection_field():
    P = ContinuousProjectionField.coordinate(3, [0], [1])
    Ps = P.at(np.array([0.0, 1.0]))
    assert Ps.shape == (3, 2, 3, 3)
    assert np.allclose(Ps.sum(axis=0), np.eye(3))
