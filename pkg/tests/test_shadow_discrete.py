import numpy as np
import pytest
from hypothesis import given, strategies as st

from shadow_forge.exceptions import NotContractive, TailBoundTooLarge
from shadow_forge.examples import example_discrete_diagonal
from shadow_forge.linear_discrete import DichotomyConstants
from shadow_forge.nonlinearity import sine_nonlinearity
from shadow_forge.pseudo_orbits import impulse, noise
from shadow_forge.shadow_discrete import (TruncationPolicy, apply_T, measure_contraction,
                                          residuals, solve_shadow, theoretical_constants,
                                          verify_shadow, weighted_defect)
from shadow_forge.systems import DiscreteSystem

from conftest import conjugated_system, random_center_system


def test_constants_discrete():
    k = theoretical_constants(0.1, 1.0)
    assert (k.q, k.D_bar, k.C) == pytest.approx((0.5, 5.0, 10.0))


def test_constants_continuous():
    k = theoretical_constants(0.0, 1.0, 1.0, "continuous")
    assert (k.q, k.D_bar, k.C) == pytest.approx((0.0, 5.0, 5.0))
    k = theoretical_constants(0.05, 1.0, 1.0, "continuous")
    assert k.q == pytest.approx(0.25)
    assert k.C == pytest.approx(6.666666666666667)


def test_constants_not_contractive():
    k = theoretical_constants(0.3, 1.0)
    assert not k.contractive and k.C == np.inf


def test_solve_raises_not_contractive(diag_system):
    sys = diag_system.with_nonlinearity(sine_nonlinearity(0.5, diag_system.weights))
    with pytest.raises(NotContractive):
        solve_shadow(np.zeros((41, 2)), sys)


def naive_T(z, y, sys):
    """Direct double sum over explicit cocycle products."""
    N, dim = sys.horizon, sys.dim
    A = sys.cocycle.A
    P1, P2, P3 = sys.projections.P[:, :N + 1]
    zb = z - np.einsum("nij,nj->ni", P3, z)
    g = [A[m] @ y[m] + sys.f(m, y[m] + zb[m]) - y[m + 1] for m in range(N)]

    def prod(n, m):  # A(n, m) for n >= m
        M = np.eye(dim)
        for k in range(m, n):
            M = A[k] @ M
        return M

    def basis(P):
        u, s, _ = np.linalg.svd(P)
        return u[:, s > 1e-10]

    out = np.zeros_like(y)
    for n in range(N + 1):
        if n > 0:
            out[n] -= P3[n] @ g[n - 1]
        for m in range(n):
            out[n] += prod(n, m + 1) @ P1[m + 1] @ g[m]
        for m in range(n, N):
            U = basis(P2[n])
            M = prod(m + 1, n) @ U  # basis of Im P2_{m+1}
            out[n] -= U @ np.linalg.lstsq(M, P2[m + 1] @ g[m], rcond=None)[0]
    return out


@given(st.integers(0, 10_000))
def test_operator_matches_naive_sums(seed):
    sys = random_center_system(seed % 50, N=10)
    rng = np.random.default_rng(seed)
    y = 0.1 * rng.normal(size=(11, 3))
    z = 0.1 * rng.normal(size=(11, 3))
    assert np.allclose(apply_T(z, y, sys), naive_T(z, y, sys), atol=1e-10)


def test_exact_orbit_fixed_point_is_zero(diag_system):
    r = solve_shadow(np.zeros((41, 2)), diag_system)
    assert r.delta == 0 and r.iterations == 0
    assert np.all(r.x == 0)


@pytest.mark.parametrize("delta", [1e-2, 1e-3])
def test_impulse_shadow_verifies(diag_system, delta):
    po = impulse(diag_system, delta, index=10)
    r = solve_shadow(po.y, diag_system)
    assert r.delta == pytest.approx(delta, rel=1e-12)
    cert = verify_shadow(r, diag_system)
    assert cert.overall, cert
    assert r.distance.max() <= r.C * r.delta
    assert r.iterations <= r.iteration_bound


def test_residual_in_center_fiber():
    sys = random_center_system(3, N=20)
    po = noise(sys, 1e-3, seed=1)
    r = solve_shadow(po.y, sys)
    res = residuals(r.x, sys)
    P3 = sys.projections.P[2]
    lifted = np.einsum("nij,nj->ni", P3[1:], res)
    assert np.allclose(res, lifted, atol=1e-12)
    assert verify_shadow(r, sys).overall


def test_linear_case_one_application():
    sys = random_center_system(4, N=20, q=0.0)
    sys = sys.with_nonlinearity(sine_nonlinearity(0.0, sys.weights))
    po = noise(sys, 1e-2, seed=2)
    r = solve_shadow(po.y, sys)
    assert r.iterations == 1
    assert np.abs(apply_T(r.z, po.y, sys) - r.z).max() <= 1e-10


def test_conjugation_covariance():
    c1, p1, A, Q = conjugated_system(5, N=14)
    from shadow_forge.linear_discrete import DiscreteCocycle, ProjectionField
    from shadow_forge.rates import make_rate, sample_rate
    B = np.linalg.solve(Q, A @ Q)
    Bc = DiscreteCocycle(np.tile(B, (14, 1, 1)))
    Pb = ProjectionField.constant(*(np.linalg.solve(Q, P @ Q) for P in p1.P[:, 0]), length=15)
    rates = sample_rate(make_rate("exponential"), 15)
    k = DichotomyConstants(4.0, 0.5, 0.0)
    sa = DiscreteSystem(c1, p1, rates, k)
    sb = DiscreteSystem(Bc, Pb, rates, k)
    rng = np.random.default_rng(0)
    yb = 1e-3 * rng.normal(size=(15, 3))
    ya = yb @ Q.T
    ra, rb = solve_shadow(ya, sa), solve_shadow(yb, sb)
    assert np.allclose(ra.x, rb.x @ Q.T, atol=1e-12)


def test_measured_contraction_below_q(diag_system):
    po = impulse(diag_system, 1e-2, index=10)
    m = measure_contraction(po.y, diag_system, pairs=30, seed=0)
    assert m["q"] == pytest.approx(0.5)
    assert m["max_ratio"] <= 0.5 * (1 + 1e-6)


def test_weighted_defect_scaling(diag_system):
    po = impulse(diag_system, 1e-3, index=10)
    d1 = weighted_defect(po.y, diag_system)[0]
    d2 = weighted_defect(2 * po.y, diag_system)[0]
    assert d2 == pytest.approx(2 * d1, rel=1e-6)


def test_strict_policy_raises_on_short_window():
    sys = example_discrete_diagonal(0.5, 2.0, N=6, c=0.1).system
    po = impulse(sys, 1e-2, index=5)
    with pytest.raises(TailBoundTooLarge):
        solve_shadow(po.y, sys, trunc=TruncationPolicy("strict", tolerance=1e-12))


def test_summary_is_plain_dict(diag_system):
    r = solve_shadow(impulse(diag_system, 1e-3).y, diag_system)
    s = r.summary()
    assert s["C_delta"] == pytest.approx(r.C * r.delta)
    assert s["policy"] == "finite_horizon"
