import numpy as np
import pytest
from hypothesis import given, strategies as st

from shadow_forge.adapted_norms import AdaptedNorm, adapted_norm, norm_component, verify_norm_lemma
from shadow_forge.examples import example_partial_exponential_3d
from shadow_forge.exceptions import FiberMismatch
from shadow_forge.linear_discrete import DichotomyConstants, DiscreteCocycle, ProjectionField
from shadow_forge.rates import make_rate, sample_rate

from conftest import conjugated_system

CENTER_WEIGHT = np.e / (np.e - 1)  # 1.5819767068693265


def diag_norm(N=20, lam=np.log(2)):
    c = DiscreteCocycle(np.tile(np.diag([0.5, 2.0]), (N, 1, 1)))
    p = ProjectionField.coordinate(2, [0], [1], N + 1)
    r = sample_rate(make_rate("exponential"), N + 1)
    return AdaptedNorm.discrete(c, p, r, DichotomyConstants(1.0, lam, 0.0))


def center_norm(N=10):
    c = DiscreteCocycle(np.tile(np.diag([0.5, 2.0, 1.0]), (N, 1, 1)))
    p = ProjectionField.coordinate(3, [0], [1], N + 1)
    r = sample_rate(make_rate("exponential"), N + 1)
    return AdaptedNorm.discrete(c, p, r, DichotomyConstants(1.0, 1.0, 0.0))


def test_center_weight_value():
    norm = center_norm()
    assert CENTER_WEIGHT == pytest.approx(1.5819767, abs=1e-7)
    v = norm_component(norm, [0, 0, 2.0], 3, "center")
    assert v.value == pytest.approx(2 * CENTER_WEIGHT, rel=1e-14)


def test_zero_vector():
    norm = center_norm()
    for fiber, x in [("stable", [0, 0, 0]), ("unstable", [0, 0, 0]), ("center", [0, 0, 0])]:
        assert norm_component(norm, x, 2, fiber).value == 0.0
    assert adapted_norm(norm, np.zeros(3), 4) == 0.0


def test_unit_vectors_on_diagonal_model():
    norm = diag_norm()
    for n in (0, 7, 20):
        assert norm_component(norm, [1.0, 0.0], n, "stable").value == pytest.approx(1.0)
        assert norm_component(norm, [0.0, 1.0], n, "unstable").value == pytest.approx(1.0)


def test_fiber_mismatch():
    norm = diag_norm()
    with pytest.raises(FiberMismatch):
        norm_component(norm, [1.0, 1.0], 0, "stable")


def test_single_fiber_equals_component():
    norm = center_norm()
    x = np.array([0.0, 3.0, 0.0])
    assert adapted_norm(norm, x, 5) == pytest.approx(norm_component(norm, x, 5, "unstable").value)


@given(st.integers(0, 2 ** 32 - 1))
def test_norm_axioms(seed):
    c, p, _, _ = conjugated_system(seed % 1000, N=12)
    r = sample_rate(make_rate("exponential"), 13)
    norm = AdaptedNorm.discrete(c, p, r, DichotomyConstants(4.0, 0.5, 0.0))
    rng = np.random.default_rng(seed)
    for _ in range(5):
        n = int(rng.integers(0, 13))
        x, y = rng.normal(size=(2, 3))
        a = rng.normal()
        nx, ny, nxy = norm(x, n), norm(y, n), norm(x + y, n)
        assert nx > 0
        assert norm(a * x, n) == pytest.approx(abs(a) * nx, rel=1e-12)
        assert nxy <= (nx + ny) * (1 + 1e-10)


def test_norm_lemma_diagonal():
    cert = verify_norm_lemma(diag_norm(), samples=300)
    assert cert.overall


def test_norm_lemma_conjugated():
    c, p, _, _ = conjugated_system(11, N=12)
    r = sample_rate(make_rate("exponential"), 13)
    from shadow_forge.linear_discrete import fit_min_D
    D = fit_min_D(c, p, r, 0.5, 0.0)
    norm = AdaptedNorm.discrete(c, p, r, DichotomyConstants(D, 0.5, 0.0))
    assert verify_norm_lemma(norm, samples=300).overall


def test_norm_lemma_continuous_3d():
    e = example_partial_exponential_3d(t_max=10.0)
    s = e.system
    norm = AdaptedNorm.continuous(s.family, s.projections, s.rate, s.constants,
                                  grid=np.linspace(0, 10, 80))
    assert norm.center_weight(5) == pytest.approx(1.0)
    assert verify_norm_lemma(norm, samples=300).overall
