"""Forward-Euler evolution of ``u_t = J*u - u + f(u)`` on a growing window.

The update ``u+ = u (1 - dt) + dt (J*u + f(u))`` is nondecreasing in every
entry of ``u`` as long as ``dt (1 + Lip f) <= 1``, so the scheme keeps the
comparison principle and the invariance of ``[0, 1]``.

The far-field constants are stepped with the same update. A constant state
``k`` has ``J*k - k = 0``, so the exact discrete continuation of a constant is
``k + dt f(k)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import BadParameter, BlowUp
from .fronts import Empty, LevelSetTrace, level_position
from .grid import Convolver, Field, Grid
from .kernel import Kernel
from .reaction import Nonlinearity

RANGE_TOL = 1e-12


@dataclass
class Problem:
    kernel: Kernel
    nonlinearity: Nonlinearity
    initial: Field
    t_end: float
    dt: float | None = None
    eta: float = 0.9
    regrid_margin: float = 0.25
    lambdas: Sequence[float] = (0.5,)
    snapshot_times: Sequence[float] = ()
    # the window is kept wide enough to hold the set where u > tail_level;
    # mass pushed past the right edge is lost, and with heavy tails that
    # mass drives the front
    tail_level: float = 1e-6
    # far-field mismatch above this is flagged in the trace
    contamination_tol: float = 1e-6
    max_points: int = 1 << 22

    def __post_init__(self):
        if not self.t_end >= 0:
            raise BadParameter(f"t_end must be >= 0, got {self.t_end}")
        if not 0.0 < self.eta <= 1.0:
            raise BadParameter(f"eta must lie in (0, 1], got {self.eta}")
        if not 0.0 < self.regrid_margin < 0.5:
            raise BadParameter(f"regrid_margin must lie in (0, 0.5), got {self.regrid_margin}")
        self.lambdas = tuple(float(l) for l in self.lambdas)
        if not self.lambdas:
            raise BadParameter("need at least one level")
        for lam in self.lambdas + (self.tail_level,):
            if not 0.0 < lam < 1.0:
                raise BadParameter(f"level {lam} outside (0, 1)")
        self.snapshot_times = tuple(sorted(float(s) for s in self.snapshot_times))
        if self.dt is not None and self.dt > _dt_bound(self) * (1 + 1e-12):
            raise BadParameter(
                f"dt={self.dt} exceeds the monotone bound {_dt_bound(self)}"
            )


def _dt_bound(problem: Problem) -> float:
    return 1.0 / (1.0 + problem.nonlinearity.lipschitz)


def stable_dt(problem: Problem) -> float:
    """``eta / (1 + L_f)``, or the user's ``dt`` if it is smaller."""
    auto = problem.eta / (1.0 + problem.nonlinearity.lipschitz)
    if problem.dt is not None:
        return min(float(problem.dt), _dt_bound(problem))
    return auto


@dataclass
class RegridEvent:
    t: float
    n_old: int
    n_new: int
    x_max: float


@dataclass
class Trace:
    lambdas: tuple
    times: list = dc_field(default_factory=list)
    levels: dict = dc_field(default_factory=dict)
    min_u: list = dc_field(default_factory=list)
    max_u: list = dc_field(default_factory=list)
    snapshots: list = dc_field(default_factory=list)
    regrids: list = dc_field(default_factory=list)
    warnings: list = dc_field(default_factory=list)
    final: Field | None = None

    def __post_init__(self):
        if not self.levels:
            self.levels = {lam: LevelSetTrace(lam) for lam in self.lambdas}

    def level(self, lam: float) -> LevelSetTrace:
        return self.levels[float(lam)]

    def _position_at(self, lam, k):
        lt = self.levels[lam]
        t = self.times[k]
        # positions are stored only for nonempty level sets
        idx = np.searchsorted(lt.times, t)
        if idx < len(lt.times) and lt.times[idx] == t:
            return lt.positions[idx]
        return math.nan

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x_{lam:g}" for lam in self.lambdas] + ["min_u", "max_u"])
            for k, t in enumerate(self.times):
                row = [repr(t)]
                row += [repr(self._position_at(lam, k)) for lam in self.lambdas]
                row += [repr(self.min_u[k]), repr(self.max_u[k])]
                w.writerow(row)


class _State:
    def __init__(self, problem: Problem):
        f0 = problem.initial
        self.kernel = problem.kernel
        self.grid = f0.grid
        self.u = f0.values.copy()
        self.u_left = float(f0.u_left)
        self.u_right = float(f0.u_right)
        self.conv = Convolver(self.kernel, self.grid)

    def field(self, meta=None) -> Field:
        return Field(self.grid, self.u.copy(), self.u_left, self.u_right, dict(meta or {}))

    def regrid(self):
        n_new = 2 * self.grid.n
        self.grid = self.grid.extended_right(n_new)
        self.u = np.concatenate([self.u, np.full(n_new - self.u.size, self.u_right)])
        self.conv = Convolver(self.kernel, self.grid)


def _check_range(u, u_left, u_right, t):
    lo = min(float(u.min()), u_left, u_right)
    hi = max(float(u.max()), u_left, u_right)
    if lo < -RANGE_TOL or hi > 1.0 + RANGE_TOL or not (math.isfinite(lo) and math.isfinite(hi)):
        raise BlowUp(f"solution left [0, 1] at t={t}: min={lo}, max={hi}")


def run(problem: Problem, hooks: Sequence[Callable] = ()) -> Trace:
    """Integrate to ``t_end`` recording level positions after every step.

    The window doubles to the right whenever the lowest tracked level enters
    the right ``regrid_margin`` fraction of it.
    """
    f = problem.nonlinearity
    dt = stable_dt(problem)
    state = _State(problem)
    trace = Trace(problem.lambdas)
    lam_min = min(min(problem.lambdas), problem.tail_level)
    pending = [s for s in problem.snapshot_times if 0.0 <= s <= problem.t_end]
    warned = False

    def needs_regrid():
        g = state.grid
        pos = level_position(state.u, g.x, lam_min)
        if pos is Empty:
            return False
        edge = g.x_max - problem.regrid_margin * (g.x_max - g.x_min)
        return pos >= edge

    def record(t):
        nonlocal warned
        x = state.grid.x
        trace.times.append(t)
        for lam in problem.lambdas:
            trace.levels[lam].record(t, level_position(state.u, x, lam))
        trace.min_u.append(float(state.u.min()))
        trace.max_u.append(float(state.u.max()))
        mismatch = abs(state.u[-1] - state.u_right)
        if mismatch > problem.contamination_tol and not warned:
            trace.warnings.append(
                f"t={t:g}: right far-field mismatch {mismatch:.3g} exceeds {problem.contamination_tol:g}"
            )
            warned = True
        while pending and pending[0] <= t + 1e-12:
            trace.snapshots.append((pending.pop(0), state.field({"t": t})))
        for hook in hooks:
            hook(t, state.field())

    _check_range(state.u, state.u_left, state.u_right, 0.0)
    while needs_regrid() and state.grid.n * 2 <= problem.max_points:
        trace.regrids.append(RegridEvent(0.0, state.grid.n, 2 * state.grid.n, state.grid.x_max))
        state.regrid()
    record(0.0)

    t = 0.0
    while t < problem.t_end:
        stop = problem.t_end
        if pending and t < pending[0] < stop:
            stop = pending[0]
        step = dt if t + dt < stop * (1.0 - 1e-14) else stop - t
        u = state.u
        Ju = state.conv.apply(u, state.u_left, state.u_right)
        state.u = u + step * (Ju - u + f(u))
        state.u_left = state.u_left + step * float(f(state.u_left))
        state.u_right = state.u_right + step * float(f(state.u_right))
        t = stop if step != dt else t + dt
        _check_range(state.u, state.u_left, state.u_right, t)
        while needs_regrid() and state.grid.n * 2 <= problem.max_points:
            trace.regrids.append(RegridEvent(t, state.grid.n, 2 * state.grid.n, state.grid.x_max))
            state.regrid()
        record(t)
    trace.final = state.field({"t": t})
    return trace


def simulate(kernel, nonlinearity, initial: Field, t_end: float, **options) -> Trace:
    return run(Problem(kernel, nonlinearity, initial, t_end, **options))
