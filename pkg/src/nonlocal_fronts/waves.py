"""Travelling waves ``J*U - U + c U' + f(U) = 0``, ``U(-inf) = 1``, ``U(+inf) = 0``.

Discretisation on ``[-L_left, L]``
-----------------------------------
Unknowns are the nodal values ``U_i`` and the constant ``rho`` that ``U``
is assumed to keep beyond the right edge. The equations are the node
residuals (tail-corrected convolution with far fields ``1`` and ``rho``) plus
the phase condition ``U(0) = phase``. For ``c > 0`` the derivative is the
second-order one-sided upwind difference using ghost values ``rho``; for
``c < 0`` the mirrored stencil with ghosts ``1``.

For monostable terms the truncated problem has a solution for a whole range
of speeds and ``rho`` carries the leftover inflow. It is accepted as a
travelling wave only if ``rho`` is large enough to carry the mass that the
kernel deposits beyond the right edge. For a true wave,

    (c + m_left) U(X) >= Phi_in(X) = int_{y<X} U(y) R(X - y) dy

(integrate the equation over ``[X, inf)``, use ``f >= 0`` and that ``U`` is
nonincreasing; ``m_left`` is the mass-weighted mean jump to the left). The
ratio of the two sides is checked on a ladder of widening windows. It must
stay above one and must not drift down, which is what happens to truncation
artefacts whose algebraic tail cannot be closed.

For ignition terms the speed is the unknown and ``rho = 0`` (``U(L) = 0``)
is imposed; Newton runs on ``(U, c)`` jointly, continued in ``theta``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import LinearOperator, gmres, splu

from .errors import BadParameter, NoConvergence, NonMonotoneSolution, ProbeFailed
from .grid import Convolver, Grid
from .kernel import Kernel, first_moment, half_moments, right_tail_integral
from .reaction import Nonlinearity, ReactionFamily


@dataclass(frozen=True)
class WaveOptions:
    length: float = 400.0
    left_length: float | None = None
    h: float = 0.25
    tol: float = 1e-9
    max_iter: int = 60
    # the window ladder used for the tail-flux test
    widen_factor: float = 4.0
    rungs: int = 2
    max_length: float = 25600.0
    # allowed relative decrease of the flux ratio between rungs
    flux_drift: float = 0.1
    tail_tol: float = 1e-3
    monotone_tol: float = 1e-10
    band: int = 8
    phase_x: float = 0.0

    def __post_init__(self):
        if not self.h > 0:
            raise BadParameter("h must be positive")
        if not self.length > 0:
            raise BadParameter("length must be positive")
        if self.rungs < 1:
            raise BadParameter("need at least one rung")
        if not self.widen_factor > 1:
            raise BadParameter("widen_factor must exceed 1")


@dataclass
class WaveProfile:
    c: float
    grid: Grid
    U: np.ndarray
    residual: float
    phase: float
    phase_level: float
    rho: float = 0.0
    iterations: int = 0
    J1: float = 0.0
    flux_ratios: list = dc_field(default_factory=list)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "residual": self.residual,
            "iterations": self.iterations,
            "phase": self.phase,
            "phase_level": self.phase_level,
            "rho": self.rho,
            "x_min": self.grid.x_min,
            "x_max": self.grid.x_max,
            "h": self.grid.h,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "U"])
            for xi, ui in zip(self.x, self.U):
                w.writerow([repr(float(xi)), repr(float(ui))])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def default_phase(nl: Nonlinearity) -> float:
    if nl.family is ReactionFamily.IGNITION:
        return nl.theta
    return 0.5


class _WaveSystem:
    """Residual and Jacobian pieces of the discrete wave problem at fixed ``c``."""

    def __init__(self, kernel, nl, c, grid, phase_level, phase_x, band):
        self.kernel = kernel
        self.nl = nl
        self.c = float(c)
        self.grid = grid
        self.h = grid.h
        self.n = grid.n
        self.phase_level = phase_level
        self.i0 = grid.index_of(phase_x)
        self.conv = Convolver(kernel, grid)
        K = self.conv.disc.K
        band = min(band, self.n - 1)
        self.band = band
        self.wband = self.conv.disc.weights[K - band: K + band + 1]
        c, h, n = self.c, self.h, self.n
        # column of d(residual)/d(rho)
        b = self.conv.from_right.copy()
        if c > 0:
            b[-1] += 1.5 * c / h
            b[-2] -= 0.5 * c / h
        self.b_rho = b

    def derivative(self, U, rho):
        c, h = self.c, self.h
        if c > 0:
            up = np.concatenate([U[1:], [rho, rho]])
            return (-3.0 * U + 4.0 * up[:-1] - up[1:]) / (2.0 * h)
        um = np.concatenate([[1.0, 1.0], U[:-1]])
        return (3.0 * U - 4.0 * um[1:] + um[:-1]) / (2.0 * h)

    def _dlin(self, v):
        c, h = self.c, self.h
        if c > 0:
            vp = np.concatenate([v[1:], [0.0, 0.0]])
            return (-3.0 * v + 4.0 * vp[:-1] - vp[1:]) / (2.0 * h)
        vm = np.concatenate([[0.0, 0.0], v[:-1]])
        return (3.0 * v - 4.0 * vm[1:] + vm[:-1]) / (2.0 * h)

    def node_residual(self, U, rho):
        KU = self.conv.apply(U, 1.0, rho)
        return KU - U + self.c * self.derivative(U, rho) + self.nl(U)

    def residual(self, U, rho):
        return np.append(self.node_residual(U, rho), U[self.i0] - self.phase_level)

    def newton_step(self, U, rho, R):
        n, c, h = self.n, self.c, self.h
        fp = self.nl.derivative(U)
        offs = list(range(-self.band, self.band + 1))
        data = [np.full(n - abs(o), self.wband[o + self.band]) for o in offs]
        P = diags(data, offs, shape=(n, n), format="lil")
        if c > 0:
            P.setdiag(P.diagonal() - 1.0 + fp - 1.5 * c / h)
            P.setdiag(P.diagonal(1) + 2.0 * c / h, 1)
            P.setdiag(P.diagonal(2) - 0.5 * c / h, 2)
        else:
            P.setdiag(P.diagonal() - 1.0 + fp + 1.5 * c / h)
            P.setdiag(P.diagonal(-1) - 2.0 * c / h, -1)
            P.setdiag(P.diagonal(-2) + 0.5 * c / h, -2)
        lu = splu(P.tocsc())
        i0, b = self.i0, self.b_rho

        def matvec(z):
            v = z[:n]
            out = self.conv.apply_linear(v) - v + c * self._dlin(v) + fp * v + b * z[n]
            return np.append(out, v[i0])

        def precond(z):
            return np.append(lu.solve(z[:n]), z[n])

        A = LinearOperator((n + 1, n + 1), matvec=matvec)
        M = LinearOperator((n + 1, n + 1), matvec=precond)
        d, _ = gmres(A, -R, M=M, rtol=1e-10, atol=0.0, restart=100, maxiter=10)
        return d


def _initial_guess(x, c_eff, nl, phase_level):
    """Logistic front joined to the algebraic tail of ``c U' = -r U^beta``."""
    z = np.clip(x / 3.0, -700.0, 700.0)
    U = 1.0 / (1.0 + ((1.0 - phase_level) / phase_level) * np.exp(z))
    beta = nl.leading_exponent
    if nl.monostable and math.isfinite(beta) and c_eff > 0:
        tail = (c_eff / (nl.r * (beta - 1.0) * np.maximum(x, 1.0))) ** (1.0 / (beta - 1.0))
        tail = np.minimum(tail, phase_level)
        U = np.where(x > 0, np.maximum(U, tail), U)
    return U


def _extend_guess(prev: WaveProfile, grid: Grid):
    """Interpolate a profile onto a wider grid, continuing its tail as a power law."""
    xo, Uo = prev.x, prev.U
    x = grid.x
    out = np.interp(x, xo, Uo)
    far = x > xo[-1]
    if np.any(far):
        m = max(Uo.size // 8, 4)
        xs, us = xo[-m:], Uo[-m:]
        ok = (xs > 1.0) & (us > 0)
        kappa = 1.0
        if ok.sum() > 2:
            kappa = max(-np.polyfit(np.log(xs[ok]), np.log(us[ok]), 1)[0], 0.5)
        out[far] = max(Uo[-1], 0.0) * (xo[-1] / x[far]) ** kappa
    return out


def _newton(system: _WaveSystem, U, rho, tol, max_iter, floor=None):
    R = system.residual(U, rho)
    nr = float(np.linalg.norm(R))
    for it in range(max_iter + 1):
        if float(np.max(np.abs(R))) < tol:
            return U, rho, it
        if it == max_iter:
            break
        d = system.newton_step(U, rho, R)
        lam = 1.0
        while lam >= 1.0 / 1024:
            Un = U + lam * d[:-1]
            rn = rho + lam * d[-1]
            if floor is not None and rn <= floor:
                lam *= 0.5
                continue
            Rn = system.residual(Un, rn)
            nn = float(np.linalg.norm(Rn))
            if np.isfinite(nn) and nn <= (1.0 - 1e-4 * lam) * nr:
                break
            lam *= 0.5
        else:
            raise NoConvergence(
                f"c={system.c:g}: damped Newton stalled at residual {float(np.max(np.abs(R))):.3g}",
                reason="newton",
                iterations=it,
            )
        U, rho, R, nr = Un, rn, Rn, nn
    raise NoConvergence(
        f"c={system.c:g}: no convergence in {max_iter} Newton steps "
        f"(residual {float(np.max(np.abs(R))):.3g})",
        reason="newton",
        iterations=max_iter,
    )


def _solve_on(kernel, nl, c, grid, opts, phase_level, guess=None, rho0=None):
    system = _WaveSystem(kernel, nl, c, grid, phase_level, opts.phase_x, opts.band)
    if guess is None:
        guess = _initial_guess(grid.x - opts.phase_x, c - first_moment(kernel), nl, phase_level)
    if rho0 is None:
        rho0 = float(guess[-1])
    U, rho, its = _newton(system, np.asarray(guess, dtype=float), float(rho0), opts.tol, opts.max_iter)
    residual = float(np.max(np.abs(system.node_residual(U, rho))))
    return U, rho, its, residual


def _grid_for(opts: WaveOptions, length: float) -> Grid:
    left = opts.length if opts.left_length is None else opts.left_length
    return Grid.from_bounds(-left, length, opts.h)


def _inflow_bound(kernel: Kernel, U, grid: Grid, c: float) -> float:
    """Smallest ``U(x_max)`` compatible with the mass flux beyond the window."""
    h = grid.h
    X = grid.x_max + 0.5 * h
    window = float(np.sum(np.maximum(U, 0.0) * h * kernel.right_tail(np.maximum(X - grid.x, 0.0))))
    plateau = float(right_tail_integral(kernel, X - grid.x_min + 0.5 * h))
    m_left, _ = half_moments(kernel)
    denom = c + m_left
    if denom <= 0:
        return math.inf
    return (window + plateau) / denom


def _check_profile(U, grid, opts, c):
    steps = np.diff(U)
    if float(steps.max()) > opts.monotone_tol:
        i = int(np.argmax(steps))
        raise NonMonotoneSolution(
            f"c={c:g}: profile increases by {steps[i]:.3g} near x={grid.x[i]:.6g}"
        )
    if U[0] < 1.0 - 1e-3:
        raise NoConvergence(f"c={c:g}: U(x_min)={U[0]:.6g} has not reached 1", reason="domain")


def solve_wave(kernel: Kernel, nl: Nonlinearity, c: float, options: WaveOptions | None = None,
               initial: WaveProfile | None = None) -> WaveProfile:
    """Solve for a monostable wave of speed ``c`` and test that it is genuine.

    Raises :class:`NoConvergence` with ``reason`` one of ``speed-bound``
    (``c <= J1``), ``newton``, ``tail-flux`` (the inflow cannot carry the
    dispersed mass), ``drift`` (the flux ratio decays as the window widens)
    or ``domain``; :class:`NonMonotoneSolution` for increasing profiles.
    """
    opts = options or WaveOptions()
    J1 = first_moment(kernel)
    c = float(c)
    if c == 0.0 or c <= J1:
        raise NoConvergence(f"c={c:g} does not exceed J1={J1:g}", reason="speed-bound", iterations=0)
    if nl.family is ReactionFamily.IGNITION:
        raise BadParameter("ignition waves have a single speed; use solve_ignition_wave")
    phase_level = default_phase(nl)

    length = opts.length
    prev = initial
    ratios = []
    rung = 0
    total_its = 0
    while True:
        grid = _grid_for(opts, length)
        guess = rho0 = None
        if prev is not None:
            guess = _extend_guess(prev, grid)
            rho0 = float(guess[-1])
        U, rho, its, residual = _solve_on(kernel, nl, c, grid, opts, phase_level, guess, rho0)
        total_its += its
        _check_profile(U, grid, opts, c)
        bound = _inflow_bound(kernel, U, grid, c)
        ratio = rho / bound
        ratios.append(float(ratio))
        if not (rho > 0 and ratio >= 1.0):
            raise NoConvergence(
                f"c={c:g}: inflow {rho:.3g} at x={grid.x_max:g} is below the "
                f"flux bound {bound:.3g}",
                reason="tail-flux",
                iterations=total_its,
            )
        if len(ratios) > 1 and ratio < (1.0 - opts.flux_drift) * ratios[-2]:
            raise NoConvergence(
                f"c={c:g}: flux ratio fell from {ratios[-2]:.3g} to {ratio:.3g} "
                f"when the window grew to {grid.x_max:g}",
                reason="drift",
                iterations=total_its,
            )
        prev = WaveProfile(c, grid, U, residual, opts.phase_x, phase_level, rho, total_its, J1, list(ratios))
        rung += 1
        if rung >= opts.rungs and rho <= opts.tail_tol:
            return prev
        if length * opts.widen_factor > opts.max_length * (1 + 1e-12):
            if rung >= opts.rungs:
                raise NoConvergence(
                    f"c={c:g}: U(x_max)={rho:.3g} still above {opts.tail_tol:g} at the largest window",
                    reason="domain",
                    iterations=total_its,
                )
            raise BadParameter("max_length too small for the requested number of rungs")
        length *= opts.widen_factor


class _IgnitionSystem(_WaveSystem):
    """Unknowns ``(U, c)`` with ``U = 0`` beyond the right edge."""

    def __init__(self, kernel, nl, grid, phase_level, phase_x, band):
        super().__init__(kernel, nl, 1.0, grid, phase_level, phase_x, band)

    def set_speed(self, c):
        self.c = float(c)

    def residual(self, U, c):
        self.set_speed(c)
        return np.append(self.node_residual(U, 0.0), U[self.i0] - self.phase_level)

    def newton_step(self, U, c, R):
        self.set_speed(c)
        # the bordered column is dF/dc = D U instead of dF/drho
        self.b_rho = self.derivative(U, 0.0)
        return super().newton_step(U, 0.0, R)


def solve_ignition_wave(kernel: Kernel, nl: Nonlinearity, options: WaveOptions | None = None,
                        c_guess: float = 1.0, initial: WaveProfile | None = None) -> WaveProfile:
    """The unique ``(c, U)`` with ``U(0) = theta`` and ``U = 0`` beyond the window.

    Newton's method on the bordered system with the speed as the extra
    unknown, started from ``initial`` when given.
    """
    if nl.family is not ReactionFamily.IGNITION:
        raise BadParameter("solve_ignition_wave needs an ignition term")
    opts = options or WaveOptions()
    grid = _grid_for(opts, opts.length)
    J1 = first_moment(kernel)
    system = _IgnitionSystem(kernel, nl, grid, nl.theta, opts.phase_x, opts.band)
    if initial is not None:
        U = np.interp(grid.x, initial.x, initial.U)
        c = float(initial.c)
    else:
        U = _initial_guess(grid.x - opts.phase_x, 0.0, nl, nl.theta)
        c = float(c_guess)
    if not c > J1:
        raise BadParameter(f"starting speed {c:g} must exceed J1={J1:g}")
    U, c, its = _newton(system, U, c, opts.tol, opts.max_iter, floor=max(J1, 0.0))
    system.set_speed(c)
    residual = float(np.max(np.abs(system.node_residual(U, 0.0))))
    _check_profile(U, grid, opts, c)
    return WaveProfile(c, grid, U, residual, opts.phase_x, nl.theta, 0.0, its, J1)


@dataclass(frozen=True)
class ProbeResult:
    c_lo: float
    c_hi: float
    J1: float
    evaluations: tuple

    def to_dict(self) -> dict:
        return {"c_lo": self.c_lo, "c_hi": self.c_hi, "J1": self.J1}


def minimal_speed_probe(kernel: Kernel, nl: Nonlinearity, c_range, tol_c: float = 1e-3,
                        options: WaveOptions | None = None, scan_points: int = 5) -> ProbeResult:
    """Bracket the minimal speed by bisection on wave-solver success.

    A coarse scan of ``c_range`` runs first; a success followed by a failure
    at a larger speed makes the predicate non-monotone and raises
    :class:`ProbeFailed` instead of being bisected away.
    """
    opts = options or WaveOptions()
    J1 = first_moment(kernel)
    lo, hi = float(c_range[0]), float(c_range[1])
    if not lo < hi:
        raise BadParameter(f"empty speed range {c_range}")
    evals = []

    def ok(c):
        try:
            prof = solve_wave(kernel, nl, c, opts)
        except NoConvergence as exc:
            evals.append((c, False, exc.iterations, exc.reason))
            return False
        evals.append((c, True, prof.iterations, "converged"))
        return True

    scan = np.linspace(lo, hi, max(scan_points, 2))
    flags = [ok(float(c)) for c in scan]
    if not flags[-1]:
        raise ProbeFailed(f"no wave found at the top of the range c={hi:g}")
    if flags[0]:
        raise ProbeFailed(f"a wave exists already at c={lo:g}; lower the range")
    first_ok = flags.index(True)
    if not all(flags[first_ok:]):
        bad = [float(c) for c, f in zip(scan[first_ok:], flags[first_ok:]) if not f]
        raise ProbeFailed(f"success is not monotone in c: failures at {bad} above c={scan[first_ok]:g}")
    c_lo, c_hi = float(scan[first_ok - 1]), float(scan[first_ok])
    while c_hi - c_lo > tol_c:
        mid = 0.5 * (c_lo + c_hi)
        if ok(mid):
            c_hi = mid
        else:
            c_lo = mid
    if not c_lo > J1:
        raise ProbeFailed(f"bracket lower end {c_lo:g} does not exceed J1={J1:g}")
    return ProbeResult(c_lo, c_hi, J1, tuple(evals))


@dataclass(frozen=True)
class IgnitionPoint:
    theta: float
    c: float
    profile: WaveProfile | None = None
    error: str | None = None


def ignition_speed_curve(kernel: Kernel, base: Nonlinearity, thetas,
                         options: WaveOptions | None = None) -> list:
    """``c_theta`` for a strictly decreasing list of thresholds.

    Each solve continues from the previous profile, lowering the threshold in
    smaller steps when Newton fails. Failures are recorded as ``c = nan``
    and the sweep continues.
    """
    thetas = [float(t) for t in thetas]
    if any(not 0.0 < t < 1.0 for t in thetas):
        raise BadParameter("thresholds must lie in (0, 1)")
    if any(b >= a for a, b in zip(thetas, thetas[1:])):
        raise BadParameter("thresholds must be strictly decreasing")
    base = base.base()
    out = []
    prev = None
    for theta in thetas:
        nl = base.with_threshold(theta)
        try:
            prof = _ignition_with_continuation(kernel, nl, options, prev)
        except NoConvergence as exc:
            out.append(IgnitionPoint(theta, math.nan, None, str(exc)))
            continue
        out.append(IgnitionPoint(theta, prof.c, prof))
        prev = prof
    return out


def _ignition_with_continuation(kernel, nl, options, prev, max_halvings=6):
    """Walk the threshold down from the previous solution in shrinking steps."""
    if prev is None:
        return solve_ignition_wave(kernel, nl, options)
    base = nl.base()
    theta_from, theta_to = prev.phase_level, nl.theta
    step = theta_to - theta_from
    cur = prev
    theta = theta_from
    halvings = 0
    while theta != theta_to:
        nxt = theta_to if abs(theta_to - theta) <= abs(step) else theta + step
        try:
            cur = solve_ignition_wave(kernel, base.with_threshold(nxt), options, initial=cur)
            theta = nxt
        except NoConvergence:
            halvings += 1
            if halvings > max_halvings:
                raise
            step *= 0.5
    return cur


def speeds_monotone(curve, rtol: float = 1e-6) -> bool:
    """True if ``c_theta`` does not decrease as ``theta`` decreases."""
    cs = [p.c for p in curve if math.isfinite(p.c)]
    return all(b >= a * (1 - rtol) - rtol for a, b in zip(cs, cs[1:]))


@dataclass(frozen=True)
class WaveReport:
    speed_margin: float
    partial_integrals: tuple
    integral_converges: bool
    monotonicity_violations: int

    def to_dict(self) -> dict:
        return {
            "c_minus_J1": self.speed_margin,
            "partial_integrals": [list(p) for p in self.partial_integrals],
            "integral_converges": self.integral_converges,
            "monotonicity_violations": self.monotonicity_violations,
        }


def check_wave_properties(profile: WaveProfile, beta: float, tol: float = 1e-10) -> WaveReport:
    """``c - J1``, ``int_0^X U^beta`` on doubling ``X`` and monotonicity.

    The integral counts as convergent when the increments between successive
    doublings shrink by a uniform factor below one.
    """
    U = np.asarray(profile.U, dtype=float)
    if float(U.max() - U.min()) < 0.5:
        raise BadParameter("profile does not connect 1 to 0; not a wave")
    x = profile.x
    h = profile.grid.h
    Ub = np.maximum(U, 0.0) ** beta
    pos = x >= 0
    cum = np.cumsum(np.where(pos, Ub, 0.0)) * h
    X = 1.0
    partial = []
    while X <= x[-1]:
        i = int(np.searchsorted(x, X, side="right")) - 1
        partial.append((X, float(cum[i])))
        X *= 2.0
    inc = np.diff([p[1] for p in partial])
    converges = False
    if inc.size >= 4:
        tailinc = inc[-4:]
        if np.all(tailinc > 0):
            q = tailinc[1:] / tailinc[:-1]
            converges = bool(np.all(q < 0.9))
        else:
            converges = bool(np.all(tailinc >= 0))
    violations = int(np.sum(np.diff(U) > tol))
    return WaveReport(profile.c - profile.J1, tuple(partial), converges, violations)


def with_phase(options: WaveOptions, x0: float) -> WaveOptions:
    return replace(options, phase_x=float(x0))
