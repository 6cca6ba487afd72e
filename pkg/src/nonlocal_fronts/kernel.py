"""Dispersal kernels with closed-form tails.

Two families are provided:

* ``algebraic``: ``J(x) = (1 + x)^-alpha / Z`` for ``x >= 0`` and
  ``(1 + |x|)^-mu / Z`` for ``x < 0`` with ``Z = 1/(alpha-1) + 1/(mu-1)``.
* ``stretched``: ``J(x) = exp(-a |x|^b) / Z``, ``0 < b < 1``, lighter than every
  power law but heavier than any exponential.

Both have analytic tail masses, which is what makes the tail-corrected
convolution in :mod:`nonlocal_fronts.grid` exact in the far field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .errors import BadParameter, MomentDiverges, TailTooHeavy


class KernelFamily(str, Enum):
    ALGEBRAIC = "algebraic"
    STRETCHED = "stretched"


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class Kernel:
    family: KernelFamily
    alpha: float
    mu: float
    a: float = float("nan")
    b: float = float("nan")
    Z: float = 1.0
    # two-sided constant: J(x) <= C x^-alpha and J(x) >= x^-alpha / C for x >= 1
    C_bound: float = float("nan")
    # one-sided constant of the upper tail bound alone, J(x) <= C_upper x^-alpha
    C_upper: float = float("nan")

    @property
    def symmetric(self) -> bool:
        return self.family is KernelFamily.STRETCHED or self.alpha == self.mu

    def density(self, x):
        x = np.asarray(x, dtype=float)
        if self.family is KernelFamily.ALGEBRAIC:
            expo = np.where(x >= 0, self.alpha, self.mu)
            return (1.0 + np.abs(x)) ** (-expo) / self.Z
        return np.exp(-self.a * np.abs(x) ** self.b) / self.Z

    def right_tail(self, X):
        """Mass of ``J`` on ``[X, inf)`` for ``X >= 0`` (vectorised)."""
        X = np.asarray(X, dtype=float)
        if self.family is KernelFamily.ALGEBRAIC:
            return (1.0 + X) ** (1.0 - self.alpha) / ((self.alpha - 1.0) * self.Z)
        return 0.5 * special.gammaincc(1.0 / self.b, self.a * X**self.b)

    def left_tail(self, X):
        """Mass of ``J`` on ``(-inf, -X]`` for ``X >= 0`` (vectorised)."""
        X = np.asarray(X, dtype=float)
        if self.family is KernelFamily.ALGEBRAIC:
            return (1.0 + X) ** (1.0 - self.mu) / ((self.mu - 1.0) * self.Z)
        return 0.5 * special.gammaincc(1.0 / self.b, self.a * X**self.b)

    def mass_between(self, lo, hi):
        """Mass of ``J`` on ``[lo, hi]`` from the analytic tails."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        # F(x) = mass on (-inf, x], split at 0 to keep tails accurate
        return _cdf(self, hi) - _cdf(self, lo)

    def tail_constant(self, alpha: float | None = None) -> float:
        """Smallest ``C`` with ``J(x) <= C x^-alpha`` on ``x >= 1``.

        For the stretched family any ``alpha`` is admissible.
        """
        if self.family is KernelFamily.ALGEBRAIC:
            if alpha is not None and alpha != self.alpha:
                raise BadParameter("algebraic kernel only bounds its own right exponent")
            return self.C_upper
        if alpha is None:
            raise BadParameter("stretched kernel needs an explicit exponent")
        x_star = max(1.0, (alpha / (self.a * self.b)) ** (1.0 / self.b))
        return x_star**alpha * math.exp(-self.a * x_star**self.b) / self.Z

    def to_config(self) -> dict:
        if self.family is KernelFamily.ALGEBRAIC:
            return {"family": self.family.value, "alpha": self.alpha, "mu": self.mu}
        return {"family": self.family.value, "a": self.a, "b": self.b}


def _cdf(kernel: Kernel, x):
    x = np.asarray(x, dtype=float)
    neg = kernel.left_tail(np.maximum(-x, 0.0))
    pos = 1.0 - kernel.right_tail(np.maximum(x, 0.0))
    return np.where(x < 0, neg, pos)


def make_kernel(family, **params) -> Kernel:
    """Build a normalised kernel.

    >>> make_kernel("algebraic", alpha=4, mu=4).Z
    0.6666666666666666
    """
    try:
        family = KernelFamily(family)
    except ValueError:
        raise BadParameter(f"unknown kernel family {family!r}") from None

    if family is KernelFamily.ALGEBRAIC:
        unknown = set(params) - {"alpha", "mu"}
        if unknown:
            raise BadParameter(f"unexpected algebraic kernel parameters {sorted(unknown)}")
        alpha = float(params.get("alpha", 4.0))
        mu = float(params.get("mu", alpha))
        for name, value in (("alpha", alpha), ("mu", mu)):
            if not value > 2.0:
                raise TailTooHeavy(
                    f"{name}={value}: tail exponents must satisfy {name} > 2 "
                    "(otherwise the first moment is infinite)"
                )
        Z = 1.0 / (alpha - 1.0) + 1.0 / (mu - 1.0)
        C_upper = 1.0 / Z
        C_bound = max(1.0 / Z, Z * 2.0**alpha)
        return Kernel(family, alpha, mu, Z=Z, C_bound=C_bound, C_upper=C_upper)

    unknown = set(params) - {"a", "b"}
    if unknown:
        raise BadParameter(f"unexpected stretched kernel parameters {sorted(unknown)}")
    a = float(params.get("a", 1.0))
    b = float(params.get("b", 0.5))
    if not a > 0.0:
        raise BadParameter(f"stretched kernel needs a > 0, got {a}")
    if not 0.0 < b < 1.0:
        raise BadParameter(f"stretched kernel needs 0 < b < 1, got {b}")
    Z = 2.0 * math.gamma(1.0 / b) / (b * a ** (1.0 / b))
    return Kernel(family, math.inf, math.inf, a=a, b=b, Z=Z)


def kernel_from_config(cfg: dict) -> Kernel:
    cfg = dict(cfg)
    family = cfg.pop("family", "algebraic")
    return make_kernel(family, **cfg)


def tail_mass(kernel: Kernel, side, X):
    X_arr = np.asarray(X, dtype=float)
    if np.any(X_arr < 0):
        raise BadParameter("tail cutoff must be >= 0")
    side = Side(side)
    out = kernel.right_tail(X_arr) if side is Side.RIGHT else kernel.left_tail(X_arr)
    return float(out) if out.ndim == 0 else out


def first_moment(kernel: Kernel) -> float:
    """``J1 = int y J(y) dy``."""
    if kernel.family is KernelFamily.STRETCHED:
        return 0.0
    alpha, mu = kernel.alpha, kernel.mu
    if alpha <= 2.0 or mu <= 2.0:
        raise MomentDiverges(f"first moment infinite for alpha={alpha}, mu={mu}")
    if alpha == mu:
        return 0.0
    right = 1.0 / ((alpha - 1.0) * (alpha - 2.0))
    left = 1.0 / ((mu - 1.0) * (mu - 2.0))
    return (right - left) / kernel.Z


def half_moments(kernel: Kernel) -> tuple[float, float]:
    """``(int_{y<0} |y| J, int_{y>0} y J)``; ``J1`` is their difference."""
    if kernel.family is KernelFamily.STRETCHED:
        # int_0^inf x e^{-a x^b} dx = Gamma(2/b) / (b a^{2/b})
        b, a = kernel.b, kernel.a
        m = math.gamma(2.0 / b) / (b * a ** (2.0 / b)) / kernel.Z
        return m, m
    right = 1.0 / ((kernel.alpha - 1.0) * (kernel.alpha - 2.0)) / kernel.Z
    left = 1.0 / ((kernel.mu - 1.0) * (kernel.mu - 2.0)) / kernel.Z
    return left, right


def absolute_moment(kernel: Kernel) -> float:
    """``int |y| J(y) dy``."""
    left, right = half_moments(kernel)
    return left + right


def right_tail_integral(kernel: Kernel, X):
    """``int_X^inf R(s) ds`` with ``R`` the right tail mass, ``X >= 0``.

    This is the mass sent beyond ``X`` by a unit plateau on ``(-inf, 0]``.
    """
    X = np.asarray(X, dtype=float)
    if kernel.family is KernelFamily.ALGEBRAIC:
        a = kernel.alpha
        return (1.0 + X) ** (2.0 - a) / ((a - 1.0) * (a - 2.0) * kernel.Z)
    # int_X^inf int_s^inf J = int_X^inf (y - X) J(y) dy, via incomplete gammas
    a, b = kernel.a, kernel.b
    z = a * X**b
    first = special.gammaincc(2.0 / b, z) * math.gamma(2.0 / b) / (b * a ** (2.0 / b))
    zeroth = special.gammaincc(1.0 / b, z) * math.gamma(1.0 / b) / (b * a ** (1.0 / b))
    return (first - X * zeroth) / kernel.Z


@dataclass(frozen=True)
class KernelDiscretization:
    """Cell masses of ``J`` on a uniform lattice of spacing ``h``.

    ``weights[k + K]`` is the mass of ``J`` on ``[(k - 1/2) h, (k + 1/2) h]``
    for ``k = -K .. K``; ``left_tail_mass`` and ``right_tail_mass`` are the
    masses beyond ``(K + 1/2) h`` on each side.
    """

    kernel: Kernel
    h: float
    K: int
    weights: np.ndarray
    left_tail_mass: float
    right_tail_mass: float

    @property
    def offsets(self) -> np.ndarray:
        return self.h * np.arange(-self.K, self.K + 1)

    def total(self) -> float:
        return float(self.weights.sum() + self.left_tail_mass + self.right_tail_mass)


def cell_weights(kernel: Kernel, h: float, K: int) -> np.ndarray:
    k = np.arange(1, K + 1, dtype=float)
    edges = (k - 0.5) * h
    right = kernel.right_tail(edges) - kernel.right_tail(edges + h)
    left = kernel.left_tail(edges) - kernel.left_tail(edges + h)
    centre = 1.0 - kernel.right_tail(0.5 * h) - kernel.left_tail(0.5 * h)
    return np.concatenate([left[::-1], [centre], right])


def discretize(kernel: Kernel, grid) -> KernelDiscretization:
    """Exact cell masses covering every offset between two grid points."""
    h = grid.h
    if not h > 0:
        raise BadParameter("grid spacing must be positive")
    K = grid.n - 1
    weights = cell_weights(kernel, h, K)
    edge = (K + 0.5) * h
    return KernelDiscretization(
        kernel=kernel,
        h=h,
        K=K,
        weights=weights,
        left_tail_mass=float(kernel.left_tail(edge)),
        right_tail_mass=float(kernel.right_tail(edge)),
    )


def discretize_window(kernel: Kernel, X: float, h: float) -> KernelDiscretization:
    """Cell masses of ``J`` on the window ``[-X, X]`` and the two tails beyond it.

    Nodes sit at ``k h``, ``|k| <= K = X / h``; the two end cells are the
    half cells ``[(K - 1/2) h, K h]`` so the window is covered exactly.
    """
    if not h > 0:
        raise BadParameter("grid spacing must be positive")
    K = int(round(X / h))
    if K < 1 or not math.isclose(K * h, X, rel_tol=1e-12):
        raise BadParameter(f"window half-width {X} is not a multiple of h={h}")
    weights = cell_weights(kernel, h, K)
    edge = K * h
    inner = (K - 0.5) * h
    # trim the outermost cells back to the window edge
    weights[-1] = float(kernel.right_tail(inner) - kernel.right_tail(edge))
    weights[0] = float(kernel.left_tail(inner) - kernel.left_tail(edge))
    return KernelDiscretization(
        kernel=kernel,
        h=h,
        K=K,
        weights=weights,
        left_tail_mass=float(kernel.left_tail(edge)),
        right_tail_mass=float(kernel.right_tail(edge)),
    )
