import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from shadow_forge.examples import example_discrete_diagonal
from shadow_forge.linear_discrete import DichotomyConstants, DiscreteCocycle, ProjectionField
from shadow_forge.nonlinearity import sine_nonlinearity
from shadow_forge.rates import make_rate, sample_rate
from shadow_forge.systems import DiscreteSystem

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def diag_system():
    """diag(1/2, 2) with c = 0.1, so q = 0.5 and C = 10."""
    return example_discrete_diagonal(0.5, 2.0, N=40, c=0.1).system


def conjugated_system(seed, N=16, dims=(1, 1, 1), c=0.0, rho=(0.5, 2.0)):
    """Random constant conjugate ``Q B Q^-1`` of a block-diagonal model with its projections.

    Blocks are stable (scaled by ``rho[0]``), unstable (``rho[1]``) and a rotation center.
    """
    rng = np.random.default_rng(seed)
    ks, ku, kc = dims
    dim = ks + ku + kc
    B = np.zeros((dim, dim))
    B[:ks, :ks] = rho[0] * np.linalg.qr(rng.normal(size=(ks, ks)))[0] if ks else 0
    B[ks:ks + ku, ks:ks + ku] = rho[1] * np.linalg.qr(rng.normal(size=(ku, ku)))[0] if ku else 0
    if kc:
        B[ks + ku:, ks + ku:] = np.linalg.qr(rng.normal(size=(kc, kc)))[0]
    Q = np.eye(dim) + 0.3 * rng.normal(size=(dim, dim))
    Qi = np.linalg.inv(Q)
    A = Q @ B @ Qi
    P = []
    for lo, hi in ((0, ks), (ks, ks + ku), (ks + ku, dim)):
        E = np.zeros((dim, dim))
        E[lo:hi, lo:hi] = np.eye(hi - lo)
        P.append(Q @ E @ Qi)
    cocycle = DiscreteCocycle(np.tile(A, (N, 1, 1)))
    proj = ProjectionField.constant(*P, length=N + 1)
    return cocycle, proj, A, Q


def random_center_system(seed, N=16, dims=(1, 1, 1), q=0.5):
    """Conjugated system with fitted D and c chosen so that c (4D + 1) = q."""
    from shadow_forge.linear_discrete import fit_min_D
    cocycle, proj, _, _ = conjugated_system(seed, N, dims)
    rate = make_rate("exponential")
    rates = sample_rate(rate, N + 1)
    lam = 0.5
    D = fit_min_D(cocycle, proj, rates, lam, 0.0)
    k = DichotomyConstants(D, lam, 0.0)
    c = q / (4 * D + 1)
    w = rates.weights(lam, 0.0)
    sys = DiscreteSystem(cocycle, proj, rates, k, sine_nonlinearity(c, w))
    return sys


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
