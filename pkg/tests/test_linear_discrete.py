import numpy as np
import pytest
from hypothesis import given, strategies as st

from shadow_forge.exceptions import IndexOutOfRange, NoFiniteD, SingularUnstableBlock
from shadow_forge.linear_discrete import (DichotomyConstants, DiscreteCocycle, ProjectionField,
                                          certify_dichotomy, check_equivariance, fit_min_D,
                                          propagate, unstable_pullback)
from shadow_forge.rates import make_rate, sample_rate

from conftest import conjugated_system


def diag_model(N=10, a=0.5, b=2.0):
    c = DiscreteCocycle(np.tile(np.diag([a, b]), (N, 1, 1)))
    p = ProjectionField.coordinate(2, [0], [1], N + 1)
    return c, p, sample_rate(make_rate("exponential"), N + 1)


def test_propagate_identity_and_powers():
    c, _, _ = diag_model()
    assert np.array_equal(propagate(c, 3, 3), np.eye(2))
    assert np.allclose(propagate(c, 2, 0), np.diag([0.25, 4.0]))


def test_propagate_matches_naive_product():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(6, 3, 3))
    c = DiscreteCocycle(A)
    M = np.eye(3)
    for k in range(1, 4):
        M = A[k] @ M
    assert np.allclose(propagate(c, 4, 1), M, rtol=1e-12)


def test_propagate_index_errors():
    c, _, _ = diag_model()
    with pytest.raises(IndexOutOfRange):
        propagate(c, 1, 2)
    with pytest.raises(IndexOutOfRange):
        propagate(c, 11, 0)


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6), st.integers(2, 12))
def test_cocycle_law(seed, dim, N):
    rng = np.random.default_rng(seed)
    c = DiscreteCocycle(rng.normal(size=(N, dim, dim)))
    m, k, n = sorted(rng.integers(0, N + 1, size=3))[::-1]
    lhs = propagate(c, m, k) @ propagate(c, k, n)
    rhs = propagate(c, m, n)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(1.0, np.linalg.norm(rhs))


def test_unstable_pullback_examples():
    c, p, _ = diag_model()
    assert np.array_equal(unstable_pullback(c, p, 4, 4), p.P2[4])
    assert np.allclose(unstable_pullback(c, p, 0, 3), np.diag([0.0, 1 / 8]))


@given(st.integers(0, 2 ** 32 - 1))
def test_pullback_inverts_on_unstable_fiber(seed):
    c, p, _, _ = conjugated_system(seed, N=8)
    B = unstable_pullback(c, p, 2, 6)
    A = propagate(c, 6, 2)
    assert np.allclose(A @ B @ p.P2[6], p.P2[6], atol=1e-9)
    assert np.allclose(B @ A @ p.P2[2], p.P2[2], atol=1e-9)


def test_singular_unstable_block():
    c = DiscreteCocycle(np.tile(np.diag([0.5, 0.0]), (3, 1, 1)))
    p = ProjectionField.coordinate(2, [0], [1], 4)
    with pytest.raises(SingularUnstableBlock):
        unstable_pullback(c, p, 0, 2)


def test_equivariance_diagonal_and_swapped():
    c, p, _ = diag_model()
    assert check_equivariance(c, p).overall
    P1, P2, P3 = (np.array(M) for M in p.P)
    P1[4], P2[4] = p.P2[4], p.P1[4]
    bad = ProjectionField(P1, P2, P3)
    cert = check_equivariance(c, bad)
    assert not cert.overall
    assert any(ch.where in (3, 4) for ch in cert.failures())


def test_equivariance_conjugated():
    c, p, _, _ = conjugated_system(3)
    assert check_equivariance(c, p).overall


def test_certify_diag_exact_ratio():
    c, p, r = diag_model()
    cert = certify_dichotomy(c, p, r, DichotomyConstants(1.0, np.log(2), 0.0))
    assert cert.overall
    worst = max(ch.worst_ratio for ch in cert.inequalities if "stable" in ch.name)
    assert worst == pytest.approx(1.0, abs=1e-12)
    assert not certify_dichotomy(c, p, r, DichotomyConstants(1.0, 1.0, 0.0)).overall
    assert certify_dichotomy(c, p, r, DichotomyConstants(10.0, np.log(2), 0.0)).overall


def test_fit_min_D():
    c, p, r = diag_model()
    assert fit_min_D(c, p, r, np.log(2), 0.0) == pytest.approx(1.0, rel=1e-12)
    assert fit_min_D(c, p, r, np.log(2) / 2, 0.0) == pytest.approx(1.0, rel=1e-12)
    A = np.array(c.A)
    A[0] = np.diag([1.0, 2.0])
    assert fit_min_D(DiscreteCocycle(A), p, r, np.log(2), 0.0) == pytest.approx(2.0, rel=1e-12)
    c40, p40, r40 = diag_model(N=40)
    with pytest.raises(NoFiniteD):
        fit_min_D(c40, p40, r40, 1.0, 0.0)


@given(st.floats(1.0, 20.0), st.floats(0.05, 0.69))
def test_certificate_monotone(D, lam):
    c, p, r = diag_model()
    base = certify_dichotomy(c, p, r, DichotomyConstants(D, lam, 0.0))
    if base.overall:
        assert certify_dichotomy(c, p, r, DichotomyConstants(2 * D, lam, 0.0)).overall
        assert certify_dichotomy(c, p, r, DichotomyConstants(D, lam / 2, 0.0)).overall
        assert certify_dichotomy(c, p, r, DichotomyConstants(D, lam, 1.0)).overall


def test_constants_validation():
    with pytest.raises(ValueError):
        DichotomyConstants(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        DichotomyConstants(1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        DichotomyConstants(1.0, 1.0, -1.0)
