import math

import numpy as np
import pytest

from mednnt.links import LinkFamily, inv_link, inv_link_deriv, inv_link_deriv2

FAMILIES = [LinkFamily.LOGIT, LinkFamily.PROBIT]


def test_values_at_zero():
    assert inv_link("logit", 0.0) == 0.5
    assert inv_link("probit", 0.0) == 0.5
    assert inv_link_deriv("logit", 0.0) == 0.25
    assert inv_link_deriv("probit", 0.0) == pytest.approx(0.3989423, abs=1e-6)


def test_logit_at_log_three():
    # expit(x) = 3/4  <=>  e^x = 3
    assert inv_link("logit", math.log(3.0)) == pytest.approx(0.75, abs=1e-15)


def test_probit_matches_erf():
    for x in np.linspace(-6, 6, 25):
        assert inv_link("probit", x) == pytest.approx(0.5 * (1 + math.erf(x / math.sqrt(2))), abs=1e-14)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("x", [-3.0, -1.0, 0.0, 1.0, 3.0])
def test_derivative_matches_central_difference(family, x):
    h = 1e-5
    fd = (inv_link(family, x + h) - inv_link(family, x - h)) / (2 * h)
    assert inv_link_deriv(family, x) == pytest.approx(fd, abs=1e-6)
    fd2 = (inv_link_deriv(family, x + h) - inv_link_deriv(family, x - h)) / (2 * h)
    assert inv_link_deriv2(family, x) == pytest.approx(fd2, abs=1e-6)


@pytest.mark.parametrize("family", FAMILIES)
def test_symmetry_grid(family):
    x = np.linspace(-10, 10, 2001)
    assert np.max(np.abs(inv_link(family, x) + inv_link(family, -x) - 1.0)) < 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_monotone_and_positive_derivative(family):
    x = np.linspace(-6, 6, 4001)  # inside the clamp for both families
    assert np.all(np.diff(inv_link(family, x)) > 0)
    assert np.all(inv_link_deriv(family, np.linspace(-30, 30, 601)) > 0)


@pytest.mark.parametrize("family", FAMILIES)
def test_clamped_inside_unit_interval(family):
    p = inv_link(family, np.array([-1e3, 1e3]))
    assert p[0] == 1e-12 and p[1] == 1 - 1e-12


def test_parse_family():
    assert LinkFamily.parse("Probit") is LinkFamily.PROBIT
    with pytest.raises(ValueError):
        LinkFamily.parse("log")
