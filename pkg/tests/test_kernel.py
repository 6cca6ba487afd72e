import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from nonlocal_fronts.errors import BadParameter, TailTooHeavy
from nonlocal_fronts.grid import Grid
from nonlocal_fronts.kernel import (
    absolute_moment,
    discretize,
    discretize_window,
    first_moment,
    kernel_from_config,
    make_kernel,
    right_tail_integral,
    tail_mass,
)

exponents = st.floats(min_value=2.05, max_value=8.0)


def test_algebraic_normalisation_closed_form():
    k = make_kernel("algebraic", alpha=4, mu=4)
    assert k.Z == pytest.approx(2 / 3, rel=1e-15)
    assert float(k.density(0.0)) == pytest.approx(1.5, rel=1e-15)
    # independent check by adaptive quadrature
    mass = integrate.quad(lambda x: (1 + abs(x)) ** -4, -np.inf, np.inf)[0]
    assert mass == pytest.approx(k.Z, rel=1e-10)


def test_alpha_two_is_too_heavy():
    with pytest.raises(TailTooHeavy):
        make_kernel("algebraic", alpha=2, mu=4)
    with pytest.raises(TailTooHeavy):
        make_kernel("algebraic", alpha=4, mu=1.5)


@pytest.mark.parametrize("params", [dict(a=0, b=0.5), dict(a=1, b=1.0), dict(a=1, b=0.0), dict(c=1)])
def test_stretched_bad_parameters(params):
    with pytest.raises(BadParameter):
        make_kernel("stretched", **params)


def test_unknown_family():
    with pytest.raises(BadParameter):
        make_kernel("gaussian")


def test_stretched_is_symmetric_and_normalised():
    k = make_kernel("stretched", a=1, b=0.5)
    x = np.linspace(0, 50, 201)
    np.testing.assert_array_equal(k.density(x), k.density(-x))
    mass = 2 * integrate.quad(lambda s: float(k.density(s)), 0, np.inf)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_tail_mass_examples():
    k = make_kernel("algebraic", alpha=4, mu=4)
    assert tail_mass(k, "right", 1.0) == pytest.approx(0.0625, rel=1e-14)
    for kern in (k, make_kernel("algebraic", alpha=4, mu=3), make_kernel("stretched", a=1, b=0.5)):
        assert tail_mass(kern, "right", 0.0) + tail_mass(kern, "left", 0.0) == pytest.approx(1.0, abs=1e-15)
    X = np.logspace(-3, 6, 200)
    tails = tail_mass(k, "right", X)
    assert np.all(np.diff(tails) <= 0)
    assert tail_mass(k, "right", 1e6) < 1e-17
    with pytest.raises(BadParameter):
        tail_mass(k, "left", -1.0)


def _quad_tail(kern, X, sign):
    # integrate in s = log(1 + |x|), where the algebraic tail is a plain exponential
    g = lambda s: float(kern.density(sign * (math.expm1(s)))) * math.exp(s)
    return integrate.quad(g, math.log1p(X), math.log1p(X) + 300, epsabs=0, epsrel=1e-12, limit=200)[0]


@given(exponents, exponents, st.floats(min_value=0, max_value=200))
def test_tail_mass_matches_quadrature(alpha, mu, X):
    k = make_kernel("algebraic", alpha=alpha, mu=mu)
    assert tail_mass(k, "right", X) == pytest.approx(_quad_tail(k, X, 1.0), rel=1e-9)
    assert tail_mass(k, "left", X) == pytest.approx(_quad_tail(k, X, -1.0), rel=1e-9)


def test_first_moment_examples():
    k = make_kernel("algebraic", alpha=4, mu=3)
    assert k.Z == pytest.approx(5 / 6)
    assert first_moment(k) == pytest.approx(-0.4, abs=1e-10)
    quad = integrate.quad(lambda y: y * float(k.density(y)), 0, np.inf)[0] + integrate.quad(
        lambda y: y * float(k.density(y)), -np.inf, 0
    )[0]
    assert first_moment(k) == pytest.approx(quad, abs=1e-8)
    assert first_moment(make_kernel("algebraic", alpha=3.3, mu=3.3)) == 0.0
    assert first_moment(make_kernel("stretched", a=1, b=0.5)) == 0.0


def test_absolute_moment_by_quadrature():
    k = make_kernel("stretched", a=0.7, b=0.4)
    quad = 2 * integrate.quad(lambda y: y * float(k.density(y)), 0, np.inf)[0]
    assert absolute_moment(k) == pytest.approx(quad, rel=1e-8)


@given(exponents, exponents)
def test_two_sided_tail_bounds(alpha, mu):
    k = make_kernel("algebraic", alpha=alpha, mu=mu)
    x = np.linspace(1, 1e4, 5000)
    J = k.density(x)
    assert np.all(J <= k.C_bound * x**-alpha)
    # equality at x = 1, up to rounding
    assert np.all(J >= x**-alpha / k.C_bound * (1 - 1e-12))
    assert np.all(k.density(-x) <= k.C_bound * x**-mu)
    assert np.all(J <= k.C_upper * x**-alpha)


@pytest.mark.parametrize("kern", [
    make_kernel("algebraic", alpha=4, mu=4),
    make_kernel("algebraic", alpha=2.5, mu=6),
    make_kernel("stretched", a=1, b=0.5),
])
def test_right_tail_integral_by_quadrature(kern):
    for X in (0.0, 3.0, 40.0):
        quad = integrate.quad(lambda s: float(kern.right_tail(s)), X, np.inf, limit=200)[0]
        assert float(right_tail_integral(kern, X)) == pytest.approx(quad, rel=1e-6)


@given(exponents, exponents, st.sampled_from([0.05, 0.1, 0.25, 0.5, 1.0]), st.integers(2, 3000))
def test_discretisation_normalised(alpha, mu, h, n):
    d = discretize(make_kernel("algebraic", alpha=alpha, mu=mu), Grid(0.0, h, n))
    assert abs(d.total() - 1.0) <= 1e-12
    assert np.all(d.weights >= 0)
    assert d.weights.size == 2 * n - 1


def test_window_example():
    k = make_kernel("algebraic", alpha=4, mu=4)
    d = discretize_window(k, 50.0, 0.1)
    assert abs(d.total() - 1.0) <= 1e-12
    assert d.right_tail_mass == pytest.approx(51.0**-3 / 3 / k.Z, rel=1e-12)
    assert d.left_tail_mass == pytest.approx(d.right_tail_mass, rel=1e-12)
    with pytest.raises(BadParameter):
        discretize_window(k, 50.05, 0.1)


def test_window_mass_refinement():
    """Cell masses are exact, so the window mass does not depend on h.

    Pointwise midpoint sampling of the density, used as a foil, converges
    at second order under the same refinement.
    """
    k = make_kernel("algebraic", alpha=4, mu=4)
    exact = 1.0 - 2 * tail_mass(k, "right", 50.0)
    errs_cell, errs_point = [], []
    for h in (0.2, 0.1, 0.05):
        d = discretize_window(k, 50.0, h)
        errs_cell.append(abs(d.weights.sum() - exact))
        mids = np.arange(-50 + h / 2, 50, h)
        errs_point.append(abs(h * k.density(mids).sum() - exact))
    assert max(errs_cell) <= 1e-12
    ratios = [errs_point[i] / errs_point[i + 1] for i in range(2)]
    assert all(3.5 < r < 4.5 for r in ratios)


def test_config_roundtrip():
    k = make_kernel("algebraic", alpha=3.5, mu=5)
    assert kernel_from_config(k.to_config()) == k
    s = make_kernel("stretched", a=0.5, b=0.3)
    assert kernel_from_config(s.to_config()) == s
