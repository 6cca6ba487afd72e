import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from nonlocal_fronts import cauchy
from nonlocal_fronts.errors import BadParameter, BlowUp
from nonlocal_fronts.grid import Field, Grid, make_front_datum
from nonlocal_fronts.kernel import make_kernel
from nonlocal_fronts.reaction import make_nonlinearity

K4 = make_kernel("algebraic", alpha=4, mu=4)
F2 = make_nonlinearity("power", r=1, beta=2)
ZERO = make_nonlinearity("zero")
GRID = Grid.from_bounds(-20, 20, 0.5)


def _problem(nl=F2, initial=None, t_end=5.0, **kw):
    initial = initial if initial is not None else make_front_datum(GRID, "step", c0=0.9)
    return cauchy.Problem(K4, nl, initial, t_end, **kw)


def test_stable_dt_examples():
    assert cauchy.stable_dt(_problem(eta=0.9)) == pytest.approx(0.45)
    assert cauchy.stable_dt(_problem(nl=ZERO, eta=1.0)) == 1.0
    assert cauchy.stable_dt(_problem(dt=0.1)) == 0.1


def test_problem_validation():
    with pytest.raises(BadParameter):
        _problem(dt=0.6)
    with pytest.raises(BadParameter):
        _problem(eta=0.0)
    with pytest.raises(BadParameter):
        _problem(regrid_margin=0.5)
    with pytest.raises(BadParameter):
        _problem(lambdas=(1.0,))
    with pytest.raises(BadParameter):
        _problem(t_end=-1.0)


@pytest.mark.parametrize("level", [0.0, 1.0])
def test_constant_states_are_fixed(level):
    init = Field(GRID, np.full(GRID.n, level), level, level)
    tr = cauchy.run(_problem(initial=init, t_end=10.0))
    assert np.max(np.abs(tr.final.values - level)) < 1e-14
    assert tr.final.u_left == level and tr.final.u_right == level


def test_blow_up_on_bad_data():
    init = Field(GRID, np.full(GRID.n, 1.5), 1.0, 0.0)
    with pytest.raises(BlowUp):
        cauchy.run(_problem(initial=init))


def _run_values(problem):
    snaps = []
    cauchy.run(problem, hooks=[lambda t, f: snaps.append(f.values)])
    return np.array(snaps)


unit_arrays = hnp.arrays(float, GRID.n, elements=st.floats(0, 1))


@settings(max_examples=15)
@given(unit_arrays, unit_arrays, st.floats(1.05, 3.0), st.floats(0.1, 1.0))
def test_comparison_principle(a, b, beta, eta):
    nl = make_nonlinearity("power", r=1, beta=beta)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    kw = dict(eta=eta, max_points=GRID.n, t_end=20.0)
    u = _run_values(_problem(nl=nl, initial=Field(GRID, lo, 0.2, 0.0), **kw))
    v = _run_values(_problem(nl=nl, initial=Field(GRID, hi, 0.7, 0.1), **kw))
    assert np.all(u <= v + 1e-12)
    assert u.min() >= -1e-12 and v.max() <= 1 + 1e-12


@settings(max_examples=15)
@given(unit_arrays, st.floats(1.05, 3.0))
def test_monotone_data_stay_monotone(a, beta):
    vals = np.sort(a)[::-1]
    init = Field(GRID, vals, vals[0], vals[-1])
    nl = make_nonlinearity("power", r=1, beta=beta)
    u = _run_values(_problem(nl=nl, initial=init, max_points=GRID.n, t_end=10.0))
    assert np.all(np.diff(u, axis=1) <= 1e-13)


def test_trace_times_and_levels():
    tr = cauchy.run(_problem(t_end=10.0, lambdas=(0.1, 0.5)))
    t = np.array(tr.times)
    assert t[0] == 0.0 and t[-1] == 10.0
    assert np.all(np.diff(t) > 0)
    assert min(tr.min_u) >= -1e-12 and max(tr.max_u) <= 1 + 1e-12
    x01 = tr.level(0.1).arrays()[1]
    x05 = tr.level(0.5).arrays()[1]
    assert np.all(x01 >= x05)


def test_snapshots_hit_requested_times(tmp_path):
    tr = cauchy.run(_problem(t_end=3.0, snapshot_times=(0.0, 1.0, 2.2)))
    assert [s for s, _ in tr.snapshots] == [0.0, 1.0, 2.2]
    assert tr.snapshots[2][1].meta["t"] == pytest.approx(2.2, abs=1e-12)
    path = tmp_path / "trace.csv"
    tr.write_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "x_0.5", "min_u", "max_u"]
    assert len(rows) == len(tr.times) + 1


def test_regrid_matches_wide_domain():
    k = make_kernel("algebraic", alpha=6, mu=6)

    def go(n, max_points):
        grid = Grid(-50.0, 0.5, n)
        snaps = []
        tr = cauchy.run(
            cauchy.Problem(k, F2, make_front_datum(grid, "step", c0=0.9), 40.0,
                           tail_level=1e-10, max_points=max_points),
            hooks=[lambda t, f: snaps.append((t, f.values))],
        )
        return tr, snaps

    narrow, sa = go(201, 1 << 20)
    wide, sb = go(1608, 1608)
    assert len(narrow.regrids) >= 2 and not wide.regrids
    assert narrow.final.grid.n <= wide.final.grid.n
    worst = 0.0
    for (ta, a), (tb, b) in zip(sa, sb):
        assert ta == tb
        worst = max(worst, float(np.max(np.abs(a - b[: a.size]))))
    assert worst <= 1e-8


def test_simulate_wrapper():
    tr = cauchy.simulate(K4, F2, make_front_datum(GRID, "step", c0=0.9), 1.0, eta=0.5)
    assert tr.times[-1] == 1.0
