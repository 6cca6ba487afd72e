import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from nonlocal_fronts.errors import BadParameter, GridMismatch
from nonlocal_fronts.grid import (
    Convolver,
    Field,
    Grid,
    convolve,
    convolve_reference,
    make_front_datum,
    read_field_csv,
    write_field_csv,
)
from nonlocal_fronts.kernel import discretize, make_kernel

KERNELS = [
    make_kernel("algebraic", alpha=4, mu=4),
    make_kernel("algebraic", alpha=2.5, mu=5),
    make_kernel("stretched", a=1, b=0.5),
]
kernels = st.sampled_from(KERNELS)


@st.composite
def fields(draw, n_max=300):
    n = draw(st.integers(2, n_max))
    h = draw(st.sampled_from([0.1, 0.25, 1.0]))
    grid = Grid(draw(st.floats(-50, 0)), h, n)
    unit = st.floats(0, 1)
    values = draw(hnp.arrays(float, n, elements=unit))
    return Field(grid, values, draw(unit), draw(unit))


def test_grid_validation():
    g = Grid.from_bounds(-1, 1, 0.5)
    assert g.n == 5 and g.x_max == 1.0
    np.testing.assert_allclose(g.x, [-1, -0.5, 0, 0.5, 1])
    with pytest.raises(BadParameter):
        Grid(0.0, 0.0, 4)
    with pytest.raises(BadParameter):
        Grid(0.0, 1.0, 1)
    with pytest.raises(GridMismatch):
        Field(g, np.zeros(4), 0, 0)


def test_step_datum():
    g = Grid.from_bounds(-5, 5, 0.05)
    f = make_front_datum(g, "step", c0=0.5, R0=0.0)
    x = g.x
    assert np.all(f.values[x <= -1] == 0.5)
    assert np.all(f.values[x >= 0] == 0.0)
    assert np.all(np.diff(f.values) <= 0)
    assert (f.u_left, f.u_right) == (0.5, 0.0)


def test_algebraic_datum():
    g = Grid.from_bounds(-5, 20, 0.5)
    f = make_front_datum(g, "algebraic", d=0.1, exponent=2)
    assert f.values[g.index_of(10.0)] == pytest.approx(0.001, rel=1e-14)


@pytest.mark.parametrize("kind,params", [
    ("step", dict(c0=0.9, R0=3)), ("algebraic", dict(d=0.3, exponent=1.5)), ("smooth", dict(plateau=0.7, x0=2)),
])
def test_datum_nonincreasing(kind, params):
    f = make_front_datum(Grid.from_bounds(-30, 30, 0.25), kind, **params)
    assert np.all(np.diff(f.values) <= 0)
    assert np.all((f.values >= 0) & (f.values < 1))


def test_datum_rejects_bad_plateau():
    g = Grid.from_bounds(-5, 5, 1.0)
    for kind, key in (("step", "c0"), ("algebraic", "d"), ("smooth", "plateau")):
        with pytest.raises(BadParameter):
            make_front_datum(g, kind, **{key: 1.0})
    with pytest.raises(BadParameter):
        make_front_datum(g, "tophat")


@pytest.mark.parametrize("kern", KERNELS)
def test_constant_is_fixed(kern):
    g = Grid.from_bounds(-20, 20, 0.25)
    out = convolve(Field(g, np.ones(g.n), 1.0, 1.0), discretize(kern, g))
    np.testing.assert_allclose(out.values, 1.0, atol=1e-13)


@pytest.mark.parametrize("kern", [KERNELS[0], KERNELS[2]])
def test_antisymmetric_front_gives_half(kern):
    g = Grid.from_bounds(-30, 30, 0.25)
    u = 1 / (1 + np.exp(g.x))
    u[g.n // 2] = 0.5
    f = Field(g, u, 1.0, 0.0)
    out = convolve(f, discretize(kern, g))
    assert out.values[g.index_of(0.0)] == pytest.approx(0.5, abs=1e-13)


def test_far_right_of_step():
    k = KERNELS[0]
    g = Grid.from_bounds(-40, 200, 0.5)
    u = (g.x <= 0).astype(float)
    out = convolve(Field(g, u, 1.0, 0.0), discretize(k, g)).values
    # every unit cell sits left of 0 + h/2, so the sum is a single tail mass
    expect = k.right_tail(g.x[g.x > 0] - 0.25)
    np.testing.assert_allclose(out[g.x > 0], expect, rtol=1e-10, atol=1e-15)
    ref = convolve_reference(Field(g, u, 1.0, 0.0), k).values
    np.testing.assert_allclose(out, ref, atol=1e-12)


@given(fields(), kernels)
def test_fast_matches_reference(f, kern):
    fast = convolve(f, discretize(kern, f.grid)).values
    ref = convolve_reference(f, kern).values
    assert np.max(np.abs(fast - ref)) < 1e-12


def test_zero_maps_to_zero():
    g = Grid.from_bounds(0, 10, 0.5)
    for kern in KERNELS:
        assert np.all(convolve_reference(Field(g, np.zeros(g.n), 0, 0), kern).values == 0)
        assert np.max(np.abs(convolve(Field(g, np.zeros(g.n), 0, 0), discretize(kern, g)).values)) < 1e-15


@given(fields(), fields(), st.floats(-3, 3), st.floats(-3, 3), kernels)
def test_linearity(f, g0, a, b, kern):
    g = Field(f.grid, np.resize(g0.values, f.grid.n), g0.u_left, g0.u_right)
    d = discretize(kern, f.grid)
    combo = Field(f.grid, a * f.values + b * g.values, a * f.u_left + b * g.u_left, a * f.u_right + b * g.u_right)
    lhs = convolve(combo, d).values
    rhs = a * convolve(f, d).values + b * convolve(g, d).values
    assert np.max(np.abs(lhs - rhs)) < 1e-12


@given(fields(), kernels)
def test_range_preserved(f, kern):
    out = convolve(f, discretize(kern, f.grid)).values
    assert out.min() >= -1e-12 and out.max() <= 1 + 1e-12


@given(fields(), kernels)
def test_monotone_in_monotone_out(f, kern):
    vals = np.sort(f.values)[::-1]
    mono = Field(f.grid, vals, max(vals[0], f.u_left), min(vals[-1], f.u_right))
    out = convolve(mono, discretize(kern, f.grid)).values
    assert np.all(np.diff(out) <= 1e-13)


def test_grid_mismatch():
    k = KERNELS[0]
    g = Grid.from_bounds(0, 10, 0.5)
    f = Field(g, np.zeros(g.n), 0, 0)
    with pytest.raises(GridMismatch):
        convolve(f, discretize(k, Grid.from_bounds(0, 10, 0.25)))
    with pytest.raises(GridMismatch):
        convolve(f, discretize(k, Grid.from_bounds(0, 5, 0.5)))


def test_convolver_linear_part():
    k = KERNELS[1]
    g = Grid.from_bounds(-10, 10, 0.25)
    c = Convolver(k, g)
    u = np.random.default_rng(0).uniform(size=g.n)
    np.testing.assert_allclose(c.apply(u, 0, 0), c.apply_linear(u), atol=1e-15)


def test_csv_roundtrip(tmp_path):
    f = make_front_datum(Grid.from_bounds(-3, 3, 0.1), "smooth", plateau=0.8)
    path = tmp_path / "snap.csv"
    write_field_csv(path, f)
    assert path.read_text().splitlines()[0] == "x,u"
    back = read_field_csv(path, f.u_left, f.u_right)
    np.testing.assert_array_equal(back.values, f.values)
    assert back.grid.n == f.grid.n
    assert back.grid.h == pytest.approx(f.grid.h, rel=1e-12)
