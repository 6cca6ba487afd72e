"""Explicit barriers for the comparison principle and their numerical checks.

Three constructions are provided:

* :class:`TwSupersolution`, a decreasing profile ``w`` with
  ``eps w'' + J*w - w + c0 w' + f(w) <= 0`` for a computed speed ``c0``.
  Waves then move no faster than ``c0``.
* :class:`UpperBarrier`, a supersolution of the evolution problem in the
  acceleration regime built from the ODE ``w_t = gamma w^beta``.
* :class:`LowerBarrier`, the matching subsolution ``g(w)`` with
  ``g(s) = s (1 - B s)``.

:func:`verify_inequality` evaluates a barrier's residual on an ``(x, t)``
product grid with the tail-corrected convolution. Far-field constants are
chosen on the conservative side of the inequality being checked, so a
truncated window can only make a check harder to pass.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import BPoly

from .errors import BadParameter, FitDegenerate, NotApplicable, RegimeMismatch
from .fronts import classify_regime
from .grid import Convolver, Grid
from .kernel import Kernel, KernelFamily, first_moment
from .reaction import Nonlinearity, make_nonlinearity

LE = "le"
GE = "ge"


@dataclass(frozen=True)
class Region:
    """Sample points ``x_lo..x_hi`` (spacing ``h``) times ``times``.

    The convolution is taken on a window padded by ``pad`` on both sides so
    that the checked points never sit next to a truncated edge.
    """

    x_lo: float
    x_hi: float
    h: float = 0.25
    times: tuple = (0.0,)
    pad: float | None = None

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise BadParameter(f"empty region [{self.x_lo}, {self.x_hi}]")
        if not self.h > 0:
            raise BadParameter("h must be positive")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if not self.times:
            raise BadParameter("need at least one time sample")

    def window(self) -> Grid:
        pad = self.pad if self.pad is not None else self.x_hi - self.x_lo
        return Grid.from_bounds(self.x_lo - pad, self.x_hi + pad, self.h)

    def to_dict(self) -> dict:
        return {"x_lo": self.x_lo, "x_hi": self.x_hi, "h": self.h, "times": list(self.times)}


@dataclass
class CertificateReport:
    passed: bool
    sense: str
    # worst signed residual: the max for "le", the min for "ge"
    max_residual: float
    argmax_x: float
    argmax_t: float
    violations: int
    grid: dict
    violation_points: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "max_residual": self.max_residual,
            "argmax_x": self.argmax_x,
            "argmax_t": self.argmax_t,
            "violations": self.violations,
            "grid": self.grid,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


class Barrier:
    """Interface used by :func:`verify_inequality`.

    ``residual = local + diffusion_sign * (J*m - m)``. ``local`` returns two
    variants (left and right limits at junctions); the worse one is kept.
    """

    diffusion_sign = 1.0
    natural_sense = LE

    def values(self, t: float, x):
        raise NotImplementedError

    def local(self, t: float, x, nl: Nonlinearity):
        raise NotImplementedError

    def limits(self, t: float):
        """``(m(-inf), m(+inf))``."""
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantBarrier(Barrier):
    """``m = k``; its residual is ``f(k)``, useful as a planted violation."""

    k: float

    def values(self, t, x):
        return np.full_like(np.asarray(x, dtype=float), self.k)

    def local(self, t, x, nl):
        v = np.full_like(np.asarray(x, dtype=float), float(nl(self.k)))
        return v, v

    def limits(self, t):
        return self.k, self.k


# -- travelling-wave supersolution ------------------------------------------------

_W_LEFT = 1.0 - math.exp(-1.0)


class _LogBridge:
    """Decreasing ``w = exp(phi)`` on ``[-1, L]`` with prescribed end slopes.

    ``-phi'`` is a Bernstein polynomial in ``s = (x+1)/(L+1)`` whose end
    coefficients fix the slopes and whose equal interior coefficients fix
    the total drop. All coefficients are positive, so ``w`` is strictly
    decreasing; the degree is raised until that holds.
    """

    def __init__(self, L: float, p: float):
        H = L + 1.0
        phi0 = math.log(_W_LEFT)
        phi1 = -p * math.log(L)
        drop = phi0 - phi1
        c0 = H * math.exp(-1.0) / _W_LEFT
        ck = H * p / L
        k = max(2, math.ceil((c0 + ck) / drop) - 1)
        interior = ((k + 1) * drop - c0 - ck) / (k - 1)
        coeffs = np.array([c0] + [interior] * (k - 1) + [ck])
        self.degree = k
        self.H = H
        self.phi0 = phi0
        speed = BPoly(coeffs.reshape(-1, 1), [0.0, 1.0])
        self._speed = speed
        self._dspeed = speed.derivative()
        self._drop = speed.antiderivative()

    def _s(self, x):
        return (np.asarray(x, dtype=float) + 1.0) / self.H

    def phi(self, x):
        return self.phi0 - self._drop(self._s(x))

    def w(self, x):
        return np.exp(self.phi(x))

    def dw(self, x):
        return -self._speed(self._s(x)) / self.H * self.w(x)

    def d2w(self, x):
        s = self._s(x)
        d1 = -self._speed(s) / self.H
        d2 = -self._dspeed(s) / self.H**2
        return (d2 + d1 * d1) * self.w(x)


@dataclass(frozen=True)
class TwSupersolution(Barrier):
    alpha: float
    beta: float
    r: float
    L: float
    M: float
    c0: float
    c_right: float
    c_left: float
    c_middle: float
    epsilon: float = 0.0
    bridge: _LogBridge | None = dc_field(default=None, repr=False, compare=False)

    @property
    def p(self) -> float:
        return self.alpha - 2.0

    def with_epsilon(self, epsilon: float) -> "TwSupersolution":
        if not 0.0 <= epsilon <= 1.0:
            raise BadParameter(f"epsilon must lie in [0, 1], got {epsilon}")
        return replace(self, epsilon=float(epsilon))

    def w(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        left = x <= -1.0
        right = x >= self.L
        mid = ~(left | right)
        out[left] = 1.0 - np.exp(x[left])
        out[right] = x[right] ** -self.p
        out[mid] = self.bridge.w(x[mid])
        return out

    def dw(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        left = x <= -1.0
        right = x >= self.L
        mid = ~(left | right)
        out[left] = -np.exp(x[left])
        out[right] = -self.p * x[right] ** (-self.p - 1.0)
        out[mid] = self.bridge.dw(x[mid])
        return out

    def d2w(self, x, side: str = "right"):
        """Second derivative; at a junction, the one-sided value from ``side``."""
        x = np.asarray(x, dtype=float)
        if side == "right":
            left, right = x < -1.0, x >= self.L
        else:
            left, right = x <= -1.0, x > self.L
        mid = ~(left | right)
        out = np.empty_like(x)
        out[left] = -np.exp(x[left])
        out[right] = self.p * (self.p + 1.0) * x[right] ** (-self.p - 2.0)
        out[mid] = self.bridge.d2w(x[mid])
        return out

    def __call__(self, x):
        return self.w(x)

    def values(self, t, x):
        return self.w(x)

    def local(self, t, x, nl):
        w = self.w(x)
        base = -w + self.c0 * self.dw(x) + nl(w)
        e = self.epsilon
        return base + e * self.d2w(x, "left"), base + e * self.d2w(x, "right")

    def limits(self, t):
        return 1.0, 0.0

    def shifted(self, t: float, x):
        """``w(x - c0 t)``, the barrier moving at its own speed."""
        return self.w(np.asarray(x, dtype=float) - self.c0 * t)


def _tw_constants(kernel: Kernel, alpha: float, r: float):
    C = kernel.tail_constant(alpha) if kernel.family is KernelFamily.STRETCHED else kernel.C_upper
    J1 = first_moment(kernel)
    p = alpha - 2.0
    c_right = J1 + C / (p * (alpha - 1.0)) + r / p
    c_left = 1.0 + r
    return c_right, c_left


def build_tw_supersolution(kernel: Kernel, alpha: float, beta: float, r: float = 1.0,
                           L: float | None = None, margin: float = 0.05,
                           nonlinearity: Nonlinearity | None = None,
                           check_to: float = 4000.0, h: float = 0.25) -> TwSupersolution:
    """Build the travelling-wave supersolution.

    ``c_right`` and ``c_left`` are the far-field speeds. ``M`` is located
    numerically as the point beyond which the inequality already holds at
    speed ``(1 + margin) max(c_right, c_left)``; ``c_middle`` is then the
    bounded-interval speed ``(max (w'')_+ + 1 + r) / min(-w')`` on ``[-1, M]``
    and ``c0`` is ``(1 + margin)`` times the largest of the three.
    """
    regime = classify_regime(alpha, beta)
    if not regime.waves:
        raise RegimeMismatch(
            f"beta={beta} < {regime.threshold:.6g}: no supersolution of this form at alpha={alpha}"
        )
    p = alpha - 2.0
    if L is None:
        L = max(3.0, 2.0 * _W_LEFT ** (-1.0 / p))
    if not L > 1.0 or not _W_LEFT > L**-p:
        raise BadParameter(f"L={L} must satisfy 1 - 1/e > L^-(alpha-2)")
    if kernel.family is KernelFamily.ALGEBRAIC and alpha != kernel.alpha:
        raise BadParameter(f"alpha={alpha} differs from the kernel's {kernel.alpha}")
    c_right, c_left = _tw_constants(kernel, alpha, r)
    bridge = _LogBridge(L, p)
    proto = TwSupersolution(alpha, beta, r, L, L, math.nan, c_right, c_left, math.nan,
                            0.0, bridge)

    nl = nonlinearity if nonlinearity is not None else make_nonlinearity("power", r=r, beta=beta)
    c_pre = (1.0 + margin) * max(c_right, c_left)
    M = _locate_M(proto, kernel, nl, c_pre, check_to, h)

    xs = np.linspace(-1.0, M, max(2001, int((M + 1.0) / 0.01)))
    d2 = np.maximum(np.maximum(proto.d2w(xs, "left"), proto.d2w(xs, "right")), 0.0)
    slope = float(np.min(-proto.dw(xs)))
    c_middle = (float(d2.max()) + 1.0 + r) / slope
    c0 = (1.0 + margin) * max(c_right, c_left, c_middle)
    return replace(proto, M=float(M), c0=float(c0), c_middle=float(c_middle))


def _locate_M(proto: TwSupersolution, kernel, nl, c, x_hi, h):
    grid = Grid.from_bounds(-x_hi, 2.0 * x_hi, h)
    conv = Convolver(kernel, grid)
    x = grid.x
    w = proto.w(x)
    Jw = conv.apply(w, 1.0, float(w[-1]))
    res = Jw - w + c * proto.dw(x) + nl(w)
    # worst case over eps in [0, 1]
    res = res + np.maximum(proto.d2w(x, "left"), proto.d2w(x, "right")).clip(min=0.0)
    keep = (x >= proto.L) & (x <= x_hi)
    bad = np.flatnonzero(res[keep] > 0.0)
    if bad.size == 0:
        return proto.L
    return float(x[keep][bad[-1]] + h)


# -- acceleration barriers -------------------------------------------------------

def _require_power_params(alpha, beta):
    if not alpha > 2.0:
        raise BadParameter(f"alpha must exceed 2, got {alpha}")
    if not beta > 1.0:
        raise BadParameter(f"beta must exceed 1, got {beta}")


@dataclass(frozen=True)
class UpperBarrier(Barrier):
    alpha: float
    beta: float
    gamma: float
    r0: float = 1.0

    diffusion_sign = -1.0
    natural_sense = GE

    @property
    def p(self) -> float:
        return (self.alpha - 1.0) / self.beta

    @property
    def q(self) -> float:
        return self.p * (self.beta - 1.0)

    def sigma(self, t):
        return self.gamma * (self.beta - 1.0) * np.asarray(t, dtype=float)

    def v0(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 1.0, 1.0, np.maximum(x, 1.0) ** -self.p)

    def x0(self, t):
        return (1.0 + self.sigma(t)) ** (1.0 / self.q)

    def x_gamma(self, t):
        if not self.gamma > self.r0:
            return math.nan
        b = self.beta
        return ((self.gamma - self.r0) ** ((b - 1.0) / b) + self.sigma(t)) ** (1.0 / self.q)

    def w(self, t, x):
        """ODE flow of ``v0``; meaningful where ``x >= x0(t)``."""
        base = self.v0(x) ** (1.0 - self.beta) - self.sigma(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return base ** (-1.0 / (self.beta - 1.0))

    def values(self, t, x):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        beyond = x > self.x0(t)
        out[beyond] = self.w(t, x[beyond])
        return out

    def __call__(self, t, x):
        return self.values(t, x)

    def local(self, t, x, nl):
        x = np.asarray(x, dtype=float)
        m = self.values(t, x)
        dt = np.where(x > self.x0(t), self.gamma * m**self.beta, 0.0)
        base = -nl(m)
        at = np.isclose(x, self.x0(t), rtol=0.0, atol=1e-12)
        left = base + np.where(at, 0.0, dt)
        right = base + np.where(at, self.gamma, dt)
        return left, right

    def limits(self, t):
        return 1.0, 0.0


def build_upper_barrier(kernel: Kernel, alpha: float, beta: float, gamma: float,
                        r0: float = 1.0) -> UpperBarrier:
    _require_power_params(alpha, beta)
    if not gamma > 0:
        raise BadParameter(f"gamma must be positive, got {gamma}")
    q = (alpha - 1.0) * (beta - 1.0) / beta
    if q >= 1.0:
        raise RegimeMismatch(
            f"q=(alpha-1)(beta-1)/beta={q:.6g} >= 1: the flow of x^-p does not outrun the tail"
        )
    return UpperBarrier(float(alpha), float(beta), float(gamma), float(r0))


@dataclass(frozen=True)
class LowerBarrier(Barrier):
    alpha: float
    beta: float
    B: float
    gamma: float
    d: float

    diffusion_sign = -1.0
    natural_sense = LE

    def g(self, s):
        s = np.asarray(s, dtype=float)
        return s * (1.0 - self.B * s)

    def v0(self, x):
        x = np.asarray(x, dtype=float)
        return self.d * np.where(x <= 1.0, 1.0, np.maximum(x, 1.0) ** (1.0 - self.alpha))

    def sigma(self, t):
        return self.gamma * (self.beta - 1.0) * np.asarray(t, dtype=float)

    def xB(self, t):
        a, b = self.alpha, self.beta
        inner = (2.0 * self.B) ** (b - 1.0) + self.sigma(t)
        return self.d ** (1.0 / (a - 1.0)) * inner ** (1.0 / ((a - 1.0) * (b - 1.0)))

    def w(self, t, x):
        base = self.v0(x) ** (1.0 - self.beta) - self.sigma(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return base ** (-1.0 / (self.beta - 1.0))

    def values(self, t, x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, 0.25 / self.B)
        beyond = x > self.xB(t)
        out[beyond] = self.g(self.w(t, x[beyond]))
        return out

    def __call__(self, t, x):
        return self.values(t, x)

    def local(self, t, x, nl):
        x = np.asarray(x, dtype=float)
        m = self.values(t, x)
        beyond = x > self.xB(t)
        w = np.zeros_like(x)
        w[beyond] = self.w(t, x[beyond])
        dt = self.gamma * w**self.beta * (1.0 - 2.0 * self.B * w)
        v = dt - nl(m)
        return v, v

    def limits(self, t):
        return 0.25 / self.B, 0.0


def build_lower_barrier(kernel: Kernel, alpha: float, beta: float, B: float, gamma: float,
                        d: float) -> LowerBarrier:
    _require_power_params(alpha, beta)
    if (beta - 1.0) * (alpha - 1.0) >= 1.0:
        raise RegimeMismatch(
            f"(beta-1)(alpha-1)={(beta - 1.0) * (alpha - 1.0):.6g} >= 1: lower barrier needs < 1"
        )
    if not 0.0 < d < 1.0:
        raise BadParameter(f"d must lie in (0, 1), got {d}")
    if not B > 0.5 / d:
        raise BadParameter(f"B={B} must exceed 1/(2d)={0.5 / d}")
    if not gamma > 0:
        raise BadParameter(f"gamma must be positive, got {gamma}")
    return LowerBarrier(float(alpha), float(beta), float(B), float(gamma), float(d))


# -- verification ----------------------------------------------------------------

def verify_inequality(barrier: Barrier, kernel: Kernel, nonlinearity: Nonlinearity,
                      region: Region, sense: str | None = None, tol: float = 0.0,
                      max_points: int = 20) -> CertificateReport:
    """Evaluate the barrier residual on ``region`` and compare its sign.

    ``sense="le"`` asks for ``residual <= tol``, ``"ge"`` for
    ``residual >= -tol``. The far fields of ``m`` are replaced by the
    constants that bias ``J*m`` against the check.
    """
    sense = barrier.natural_sense if sense is None else sense
    if sense not in (LE, GE):
        raise BadParameter(f"sense must be 'le' or 'ge', got {sense!r}")
    grid = region.window()
    conv = Convolver(kernel, grid)
    x = grid.x
    keep = (x >= region.x_lo - 1e-9) & (x <= region.x_hi + 1e-9)
    xs = x[keep]
    # overestimating J*m raises the residual when it enters with a + sign
    over = (barrier.diffusion_sign > 0) == (sense == LE)

    worst = -math.inf if sense == LE else math.inf
    arg_x = arg_t = math.nan
    count = 0
    points = []
    for t in region.times:
        m = barrier.values(t, x)
        lim_left, lim_right = barrier.limits(t)
        if over:
            u_left, u_right = lim_left, float(m[-1])
        else:
            u_left, u_right = float(m[0]), lim_right
        diff = (conv.apply(m, u_left, u_right) - m)[keep]
        lo, hi = barrier.local(t, xs, nonlinearity)
        if sense == LE:
            res = np.maximum(lo, hi) + barrier.diffusion_sign * diff
            k = int(np.argmax(res))
            bad = np.flatnonzero(res > tol)
            better = res[k] > worst
        else:
            res = np.minimum(lo, hi) + barrier.diffusion_sign * diff
            k = int(np.argmin(res))
            bad = np.flatnonzero(res < -tol)
            better = res[k] < worst
        if better:
            worst, arg_x, arg_t = float(res[k]), float(xs[k]), float(t)
        count += int(bad.size)
        for i in bad[: max(0, max_points - len(points))]:
            points.append((float(t), float(xs[i]), float(res[i])))

    info = region.to_dict()
    info["window"] = [grid.x_min, grid.x_max]
    return CertificateReport(count == 0, sense, worst, arg_x, arg_t, count, info, points)


# -- parameter searches ----------------------------------------------------------

def search_upper_barrier(kernel, nonlinearity, alpha, beta, region: Region, gamma0=None,
                         max_doublings: int = 12, tol: float = 1e-12):
    """Double ``gamma`` from ``r0 + 1`` until the supersolution check passes."""
    r0 = nonlinearity.r
    gamma = r0 + 1.0 if gamma0 is None else float(gamma0)
    history = []
    for _ in range(max_doublings + 1):
        bar = build_upper_barrier(kernel, alpha, beta, gamma, r0=r0)
        rep = verify_inequality(bar, kernel, nonlinearity, region, GE, tol)
        history.append((gamma, rep.passed))
        if rep.passed:
            return bar, rep, history
        gamma *= 2.0
    return bar, rep, history


def search_lower_barrier(kernel, nonlinearity, alpha, beta, d, region: Region, B0=None,
                         max_doublings: int = 16, tol: float = 1e-12):
    """Double ``B`` (with ``gamma = C0/2``) until the subsolution check passes.

    ``C0 = delta 2^-beta (1 - 1/(4B))`` where ``f(u) >= delta u^beta (1 - u)``;
    for the power family ``delta = r``.
    """
    delta = nonlinearity.r
    B = (0.5 / d) * 1.01 if B0 is None else float(B0)
    history = []
    for _ in range(max_doublings + 1):
        C0 = delta * 2.0**-beta * (1.0 - 0.25 / B)
        bar = build_lower_barrier(kernel, alpha, beta, B, 0.5 * C0, d)
        rep = verify_inequality(bar, kernel, nonlinearity, region, LE, tol)
        history.append((B, bar.gamma, rep.passed))
        if rep.passed:
            return bar, rep, history
        B *= 2.0
    return bar, rep, history


# -- nonlocal tail estimate ------------------------------------------------------

@dataclass
class TailEstimate:
    alpha: float
    p: float
    C1: float
    C2: float
    X0: float
    holds: bool
    degenerate: bool
    x: np.ndarray
    diff: np.ndarray

    def bound(self, x):
        x = np.asarray(x, dtype=float)
        return self.C1 * x ** (1.0 - self.alpha) - self.C2 * x ** (-self.p - 1.0)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "p": self.p, "C1": self.C1, "C2": self.C2, "X0": self.X0,
                "holds": self.holds, "degenerate": self.degenerate}


def nonlocal_power_diff(kernel: Kernel, p: float, x: float) -> float:
    """``J*w(x) - w(x)`` for ``w = min(1, x^-p)`` and ``x >= 1``.

    Written as ``int J(z) (w(x - z) - w(x)) dz`` to avoid cancellation.
    The plateau part is exact through the tail mass.
    """
    if not x >= 1.0:
        raise BadParameter("x must be >= 1")
    wx = x**-p
    plateau = (1.0 - wx) * float(kernel.right_tail(x - 1.0))

    def integrand(z):
        return float(kernel.density(z)) * ((x - z) ** -p - wx)

    opts = dict(epsabs=0.0, epsrel=1e-11, limit=400)
    left, _ = integrate.quad(integrand, -np.inf, 0.0, **opts)
    right = 0.0
    if x - 1.0 > 0.0:
        brk = [0.5 * (x - 1.0)] if x > 3.0 else None
        right, _ = integrate.quad(integrand, 0.0, x - 1.0, points=brk, **opts)
    return plateau + left + right


def check_tail_estimate(kernel: Kernel, p: float, X_range=(10.0, 1e4), samples: int = 40,
                        alpha: float | None = None) -> TailEstimate:
    """Fit ``J*w - w >= C1 x^(1-alpha) - C2 x^-(p+1)`` for ``w = min(1, x^-p)``.

    The constants are the tightest lower envelope of the sampled values: a
    two-variable linear program maximising the scaled model subject to
    staying below every sample, with ``C1, C2 >= 0``. ``holds`` needs a
    strictly positive ``C1``.

    With ``p + 1 = alpha - 1`` the two terms coincide. ``C1`` is then pinned
    to the leading coefficient of the plateau's tail mass, ``1/((alpha-1) Z)``,
    and ``C2`` is the smallest constant that keeps the bound valid.
    """
    if not p >= 0:
        raise BadParameter(f"p must be >= 0, got {p}")
    if alpha is None:
        if kernel.family is not KernelFamily.ALGEBRAIC:
            raise NotApplicable("stretched kernels need an explicit alpha")
        alpha = kernel.alpha
    lo, hi = float(X_range[0]), float(X_range[1])
    if not 1.0 <= lo < hi:
        raise BadParameter(f"bad range {X_range}")
    x = np.geomspace(lo, hi, samples)
    if p == 0:
        diff = np.zeros_like(x)
    else:
        diff = np.array([nonlocal_power_diff(kernel, p, xi) for xi in x])

    a = x ** (1.0 - alpha)
    b = -x ** (-p - 1.0)
    degenerate = abs((p + 1.0) - (alpha - 1.0)) < 1e-9
    if p == 0:
        return TailEstimate(float(alpha), 0.0, 0.0, 0.0, lo, bool(np.all(diff == 0.0)),
                            False, x, diff)
    if degenerate:
        C1 = 1.0 / ((alpha - 1.0) * kernel.Z)
        C2 = max(0.0, float(np.max((C1 * a - diff) / -b)))
    else:
        scale = np.maximum(np.abs(a), np.abs(b))
        A = np.column_stack([a / scale, b / scale])
        sv = np.linalg.svd(A, compute_uv=False)
        if x.size < 2 or sv[-1] < 1e-10 * sv[0]:
            raise FitDegenerate(
                f"columns x^(1-alpha) and x^-(p+1) are indistinguishable on {X_range}"
            )
        res = optimize.linprog(-A.sum(axis=0), A_ub=A, b_ub=diff / scale,
                               bounds=[(0, None), (0, None)], method="highs")
        if res.status != 0:
            raise FitDegenerate(f"envelope fit failed: {res.message}")
        C1, C2 = (float(v) for v in res.x)
    bound = C1 * a + C2 * b
    ok = diff >= bound - 1e-9 * np.abs(diff)
    fails = np.flatnonzero(~ok)
    X0 = lo if fails.size == 0 else (float(x[fails[-1] + 1]) if fails[-1] + 1 < x.size else math.inf)
    holds = bool(C1 > 0 and fails.size == 0)
    return TailEstimate(float(alpha), float(p), C1, C2, X0, holds, degenerate, x, diff)


def tail_gain_constant(x, u, alpha: float, x_range=(1.0, 100.0)) -> float:
    """Largest ``d`` with ``u(x) >= d min(1, x^-(alpha-1))`` on ``x_range``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    keep = (x >= x_range[0]) & (x <= x_range[1])
    if not np.any(keep):
        raise BadParameter(f"no samples in {x_range}")
    env = np.minimum(1.0, x[keep] ** (1.0 - alpha))
    return float(np.min(u[keep] / env))
