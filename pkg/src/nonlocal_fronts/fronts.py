"""Level sets, speed and exponent fits, and the (alpha, beta) regime map."""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import BadParameter, InsufficientData, NotApplicable


class _Empty:
    """Marker for an empty super level set."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Empty"

    def __bool__(self):
        return False


Empty = _Empty()


def level_position(values, x, lam: float):
    """Rightmost point where ``u >= lam``, linearly interpolated.

    Returns ``Empty`` if ``u < lam`` everywhere and ``math.inf`` when the
    level set reaches the right edge of the window (caller should regrid).

    >>> level_position([1.0, 0.6, 0.2], [0.0, 1.0, 2.0], 0.4)
    1.5
    """
    if not 0.0 < lam < 1.0:
        raise BadParameter(f"level must lie in (0, 1), got {lam}")
    u = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    above = np.flatnonzero(u >= lam)
    if above.size == 0:
        return Empty
    i = int(above[-1])
    if i == u.size - 1:
        return math.inf
    u0, u1 = u[i], u[i + 1]
    if u0 == lam:
        return float(x[i])
    s = (u0 - lam) / (u0 - u1)
    return float(x[i] + s * (x[i + 1] - x[i]))


@dataclass
class LevelSetTrace:
    lam: float
    times: list = dc_field(default_factory=list)
    positions: list = dc_field(default_factory=list)
    empties: list = dc_field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise BadParameter(f"level must lie in (0, 1), got {self.lam}")

    def record(self, t: float, pos) -> None:
        if pos is Empty:
            self.empties.append(t)
            return
        self.times.append(float(t))
        self.positions.append(float(pos))

    def arrays(self):
        return np.asarray(self.times, dtype=float), np.asarray(self.positions, dtype=float)

    def window(self, t_lo: float, t_hi: float):
        t, x = self.arrays()
        keep = (t >= t_lo) & (t <= t_hi) & np.isfinite(x)
        return t[keep], x[keep]


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r_squared,
            "window": list(self.window),
        }


def _trace_window(trace, window):
    if isinstance(trace, LevelSetTrace):
        t, x = trace.arrays()
    else:
        t, x = (np.asarray(a, dtype=float) for a in trace)
    if window is None:
        t_hi = float(t.max()) if t.size else 0.0
        window = (t_hi / 10.0, t_hi)
    t_lo, t_hi = float(window[0]), float(window[1])
    if not t_lo < t_hi:
        raise BadParameter(f"empty fit window {window}")
    keep = (t >= t_lo) & (t <= t_hi) & np.isfinite(x)
    return t[keep], x[keep], (t_lo, t_hi)


def _lstsq_line(X, Y):
    A = np.vstack([X, np.ones_like(X)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return float(slope), float(intercept), min(r2, 1.0)


def fit_exponent(trace, window=None, min_samples: int = 10) -> ExponentFit:
    """Slope of ``log x`` against ``log t``; default window is the last decade."""
    t, x, win = _trace_window(trace, window)
    if t.size < min_samples:
        raise InsufficientData(f"{t.size} samples in window {win}, need {min_samples}")
    if np.any(x <= 0) or np.any(t <= 0):
        raise InsufficientData("log-log fit needs positive times and positions")
    slope, intercept, r2 = _lstsq_line(np.log(t), np.log(x))
    return ExponentFit(slope, intercept, r2, win)


def estimate_speed(trace, window=None, min_samples: int = 10) -> float:
    """Least-squares slope of ``x`` against ``t`` on the window."""
    t, x, win = _trace_window(trace, window)
    if t.size < min_samples:
        raise InsufficientData(f"{t.size} samples in window {win}, need {min_samples}")
    slope, _, _ = _lstsq_line(t, x)
    return slope


class RegimeKind(str, Enum):
    WAVES = "waves"
    ACCELERATION = "acceleration"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    alpha: float
    beta: float
    threshold: float
    margin: float
    # both sides of the algebraic level-set bracket are known to apply
    two_sided_bracket: bool

    @property
    def waves(self) -> bool:
        return self.kind is RegimeKind.WAVES

    def exponent_bracket(self):
        """``(1/((alpha-1)(beta-1)), 1/((alpha-1)(beta-1)) + 1/(alpha-1))``."""
        if self.waves:
            raise NotApplicable("level sets move linearly in the waves regime")
        lo = 1.0 / ((self.alpha - 1.0) * (self.beta - 1.0))
        return lo, lo + 1.0 / (self.alpha - 1.0)

    def to_dict(self) -> dict:
        return {
            "regime": self.kind.value,
            "threshold": self.threshold,
            "margin": self.margin,
        }


def wave_threshold(alpha: float) -> float:
    return 1.0 + 1.0 / (alpha - 2.0)


def classify_regime(alpha: float, beta: float) -> Regime:
    """Waves iff ``beta >= 1 + 1/(alpha-2)`` (boundary counts as waves).

    ``beta = inf`` stands for reactions flatter than any power at 0.
    """
    alpha = float(alpha)
    beta = float(beta)
    if not alpha > 2.0:
        raise BadParameter(f"alpha must exceed 2, got {alpha}")
    if not beta > 1.0:
        raise BadParameter(f"beta must exceed 1, got {beta}")
    threshold = wave_threshold(alpha)
    if math.isinf(beta):
        return Regime(RegimeKind.WAVES, alpha, beta, threshold, math.inf, False)
    # decide (beta-1)(alpha-2) >= 1 in exact arithmetic on the shortest decimal
    # form of the inputs, so alpha=4.5, beta=1.4 lands on the boundary as typed
    a, b = Fraction(repr(alpha)), Fraction(repr(beta))
    waves = (b - 1) * (a - 2) >= 1
    kind = RegimeKind.WAVES if waves else RegimeKind.ACCELERATION
    two_sided = (not waves) and (b - 1) * (a - 1) < 1
    return Regime(kind, alpha, beta, threshold, beta - threshold, two_sided)


@dataclass(frozen=True)
class TailIteration:
    gammas: tuple
    steps: int
    verdict: str
    beta_gamma_last: float


def tail_exponent_iteration(alpha: float, beta: float, eps: float, max_steps: int = 100) -> TailIteration:
    """Iterate ``gamma -> beta*gamma - 1`` from ``alpha - 2 + eps``.

    Stops at the first ``gamma_N <= 1/beta``: a tail ``x^-gamma_N`` then has
    ``U^beta`` non-integrable, which rules a wave out.
    """
    regime = classify_regime(alpha, beta)
    if regime.waves:
        raise NotApplicable(f"(alpha={alpha}, beta={beta}) is in the waves regime")
    if not eps > 0:
        raise BadParameter("eps must be positive")
    g = alpha - 2.0 + eps
    if not g < 1.0 / (beta - 1.0):
        raise BadParameter(f"eps={eps} too large: gamma_0={g} >= 1/(beta-1)")
    gammas = [g]
    while g > 1.0 / beta:
        if len(gammas) > max_steps:
            raise BadParameter(f"no termination within {max_steps} steps")
        g = beta * g - 1.0
        gammas.append(g)
    return TailIteration(tuple(gammas), len(gammas) - 1, "no-wave", beta * g)


def tail_iteration_steps(alpha: float, beta: float, eps: float) -> int:
    """Closed form for the step count of :func:`tail_exponent_iteration`.

    With ``g* = 1/(beta-1)``, ``g* - gamma_n = beta^n (g* - gamma_0)``, so the
    first ``n`` with ``gamma_n <= 1/beta`` follows from one logarithm.
    """
    gstar = 1.0 / (beta - 1.0)
    g0 = alpha - 2.0 + eps
    if g0 <= 1.0 / beta:
        return 0
    need = (gstar - 1.0 / beta) / (gstar - g0)
    n = math.ceil(math.log(need) / math.log(beta) - 1e-12)
    return max(n, 0)
