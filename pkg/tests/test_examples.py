import numpy as np
import pytest

from shadow_forge.examples import (CATALOG, discretize, example_discrete_diagonal,
                                   example_partial_exponential_3d, example_polynomial_2d,
                                   example_tempered_scalar, get_example, integrated_version)
from shadow_forge.exceptions import InvalidSign


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (-1.0, -0.5), (0.0, 1.0)])
def test_polynomial_signs(a, b):
    with pytest.raises(InvalidSign):
        example_polynomial_2d(a, b)


def test_polynomial_zero_lambda():
    with pytest.raises(InvalidSign):
        example_polynomial_2d(-1.0, 0.0)


def test_discrete_diagonal_validation():
    with pytest.raises(ValueError):
        example_discrete_diagonal(1.5, 2.0)
    e = example_discrete_diagonal(0.5, 3.0)
    assert e.constants.lam == pytest.approx(np.log(2))


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_certifies(name):
    kw = {"t_max": 6.0} if name != "discrete_diagonal" else {}
    if name == "polynomial_2d":
        kw = {"t_max": 40.0}
    e = get_example(name, **kw)
    cert = e.certify()
    assert cert.overall
    assert max(ch.worst_ratio for ch in cert.inequalities) <= 1 + 1e-8


def test_sampled_entry():
    e = get_example("partial_exponential_3d_sampled", t_max=12.0)
    assert e.kind == "discrete" and e.system.horizon == 12
    assert e.certify().overall


def test_closed_form_matches_generator():
    for e in (example_partial_exponential_3d(t_max=2.0), example_tempered_scalar(t_max=2.0)):
        fam = e.system.family
        num = integrated_version(e, h=1e-3)
        for t, s in ((1.0, 0.0), (2.0, 0.5)):
            assert np.allclose(num.T(t, s), fam.T(t, s), rtol=1e-7, atol=1e-10)


def test_with_c_rebuilds():
    e = example_tempered_scalar(t_max=5.0)
    assert e.with_c(0.02).system.c == 0.02
    assert e.system.c == 0.0


def test_discretize_requires_continuous():
    with pytest.raises(ValueError):
        discretize(example_discrete_diagonal(), 5)


def test_unknown_entry():
    with pytest.raises(KeyError):
        get_example("nope")
