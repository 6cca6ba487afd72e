import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonlocal_fronts.errors import BadParameter
from nonlocal_fronts.reaction import (
    lipschitz_bound,
    make_nonlinearity,
    nonlinearity_from_config,
)

U = np.linspace(0.0, 1.0, 100_001)


def test_examples():
    assert float(make_nonlinearity("power", r=1, beta=2)(0.5)) == pytest.approx(0.125, rel=1e-15)
    z = float(make_nonlinearity("zeldovich", r=1)(0.5))
    assert z == pytest.approx(math.exp(-2) * 0.5, rel=1e-15)
    assert z == pytest.approx(0.067667, abs=1e-6)
    g = make_nonlinearity("ignition", r=1, beta=2, theta=0.2)
    assert float(g(0.15)) == 0.0


def test_lipschitz_examples():
    assert lipschitz_bound(make_nonlinearity("power", r=1, beta=2)) == 1.0
    assert make_nonlinearity("zero").lipschitz == 0.0
    z = make_nonlinearity("zeldovich", r=1)
    dense = float(np.max(np.abs(z.derivative(np.linspace(0, 1, 1_000_001)))))
    assert dense <= z.lipschitz <= 1.1 * dense * (1 + 1e-6)


@pytest.mark.parametrize("params", [
    dict(family="power", r=1, beta=1.0),
    dict(family="power", r=0, beta=2),
    dict(family="power", r=-1, beta=2),
    dict(family="ignition", r=1, beta=2, theta=0.0),
    dict(family="ignition", r=1, beta=2, theta=1.0),
    dict(family="zeldovich", r=1, beta=2),
    dict(family="cubic"),
])
def test_bad_parameters(params):
    params = dict(params)
    with pytest.raises(BadParameter):
        make_nonlinearity(params.pop("family"), **params)


families = st.one_of(
    st.builds(lambda r, b: make_nonlinearity("power", r=r, beta=b),
              st.floats(0.1, 5), st.floats(1.01, 6)),
    st.builds(lambda r: make_nonlinearity("zeldovich", r=r), st.floats(0.1, 5)),
    st.builds(lambda r, b, t: make_nonlinearity("ignition", r=r, beta=b, theta=t),
              st.floats(0.1, 5), st.floats(1.01, 6), st.floats(0.01, 0.99)),
    st.builds(lambda r, t: make_nonlinearity("bistable", r=r, theta=t),
              st.floats(0.1, 5), st.floats(0.01, 0.99)),
)


@given(families)
def test_endpoints_and_lipschitz_envelope(nl):
    assert float(nl(0.0)) == 0.0 and float(nl(1.0)) == 0.0
    vals = np.abs(nl(U))
    assert np.all(vals <= nl.lipschitz * np.minimum(U, 1 - U) * (1 + 1e-12) + 1e-300)
    assert nl.lipschitz >= float(np.max(np.abs(nl.derivative(U)))) * (1 - 1e-12)


@given(st.floats(0.1, 5), st.floats(1.01, 6))
def test_power_leading_behaviour(r, beta):
    nl = make_nonlinearity("power", r=r, beta=beta)
    for u in (1e-4, 1e-6):
        assert float(nl(u)) / u**beta == pytest.approx(r, rel=0.01)
    assert np.all(nl(U[1:-1]) > 0)
    assert nl.leading_exponent == beta


@given(st.floats(0.1, 5), st.floats(1.01, 6), st.floats(0.001, 0.99))
def test_ignition_below_base(r, beta, theta):
    f = make_nonlinearity("power", r=r, beta=beta)
    g = f.with_threshold(theta)
    assert np.all(g(U) <= f(U))
    assert np.all(g(U[U <= theta]) == 0.0)
    assert g.base() == f


def test_zeldovich_positive_and_flat():
    z = make_nonlinearity("zeldovich", r=2)
    # exp(-1/u) underflows below u ~ 1/745
    inner = U[(U > 2e-3) & (U < 1)]
    assert np.all(z(inner) > 0)
    assert z.leading_exponent == math.inf
    assert float(z.derivative(1.0)) == pytest.approx(-2 * math.exp(-1))


def test_derivative_matches_finite_differences():
    for nl in (make_nonlinearity("power", r=1.3, beta=1.7),
               make_nonlinearity("zeldovich", r=1),
               make_nonlinearity("ignition", r=1, beta=2, theta=0.3),
               make_nonlinearity("bistable", r=1, theta=0.3)):
        u = np.linspace(0.05, 0.95, 50)
        fd = (nl(u + 1e-6) - nl(u - 1e-6)) / 2e-6
        np.testing.assert_allclose(nl.derivative(u), fd, atol=1e-6)


def test_config_roundtrip():
    for nl in (make_nonlinearity("power", r=2, beta=1.5),
               make_nonlinearity("ignition", r=1, beta=2, theta=0.1),
               make_nonlinearity("zero")):
        assert nonlinearity_from_config(nl.to_config()) == nl
