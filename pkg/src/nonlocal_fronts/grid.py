"""Uniform grids, front-like fields and the tail-corrected convolution.

A :class:`Field` carries its far-field constants ``u_left`` / ``u_right``.
Off-window values are taken to be exactly those constants, so

    (J*u)_i = sum_j W[i-j] u_j + u_left * R((i+1/2) h) + u_right * L((n-1-i+1/2) h)

where ``W`` are exact cell masses and ``R``/``L`` the analytic tail masses.
Nodal values stand for cell averages; the operator is positive, has mass one,
and commutes with the far-field declaration.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from scipy.signal import fftconvolve

from .errors import BadParameter, GridMismatch
from .kernel import Kernel, KernelDiscretization, discretize


@dataclass(frozen=True)
class Grid:
    x_min: float
    h: float
    n: int

    def __post_init__(self):
        if not self.h > 0:
            raise BadParameter(f"grid spacing must be positive, got {self.h}")
        if self.n < 2:
            raise BadParameter(f"grid needs at least 2 points, got {self.n}")

    @classmethod
    def from_bounds(cls, x_min: float, x_max: float, h: float) -> "Grid":
        n = int(round((x_max - x_min) / h)) + 1
        return cls(float(x_min), float(h), n)

    @property
    def x_max(self) -> float:
        return self.x_min + (self.n - 1) * self.h

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)

    def index_of(self, x0: float) -> int:
        i = int(round((x0 - self.x_min) / self.h))
        if not 0 <= i < self.n:
            raise BadParameter(f"x={x0} lies outside the grid")
        return i

    def extended_right(self, n_new: int) -> "Grid":
        return Grid(self.x_min, self.h, n_new)


@dataclass
class Field:
    grid: Grid
    values: np.ndarray
    u_left: float
    u_right: float
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise GridMismatch(f"values of shape {self.values.shape} on a grid of {self.grid.n}")
        if not np.all(np.isfinite(self.values)):
            raise BadParameter("field values must be finite")

    def with_values(self, values, u_left=None, u_right=None) -> "Field":
        return replace(
            self,
            values=np.asarray(values, dtype=float),
            u_left=self.u_left if u_left is None else u_left,
            u_right=self.u_right if u_right is None else u_right,
            meta=dict(self.meta),
        )

    def boundary_mismatch(self) -> float:
        return max(abs(self.values[0] - self.u_left), abs(self.values[-1] - self.u_right))


def _smoothstep_down(s):
    """C1 cubic going from 1 at s<=0 to 0 at s>=1."""
    s = np.clip(s, 0.0, 1.0)
    return 1.0 - s * s * (3.0 - 2.0 * s)


def make_front_datum(grid: Grid, kind: str = "step", **params) -> Field:
    """Front-like initial data: nonincreasing, zero (or decaying) on the right.

    kinds
      ``step``      plateau ``c0`` on ``x <= -R0 - 1``, zero on ``x >= -R0``
      ``algebraic`` ``d`` on ``x <= 1`` and ``d x^-exponent`` beyond
      ``smooth``    logistic ``plateau / (1 + exp((x - x0) / width))``
    """
    x = grid.x
    if kind == "step":
        c0 = float(params.get("c0", 0.5))
        R0 = float(params.get("R0", 0.0))
        _check_plateau(c0)
        values = c0 * _smoothstep_down(x + R0 + 1.0)
        return Field(grid, values, c0, 0.0, {"kind": kind, "c0": c0, "R0": R0})
    if kind == "algebraic":
        d = float(params.get("d", 0.1))
        expo = float(params.get("exponent", 2.0))
        _check_plateau(d)
        if not expo > 0:
            raise BadParameter("tail exponent must be positive")
        values = d * np.minimum(1.0, np.maximum(x, 1.0) ** (-expo))
        return Field(grid, values, d, 0.0, {"kind": kind, "d": d, "exponent": expo})
    if kind == "smooth":
        plateau = float(params.get("plateau", 0.9))
        width = float(params.get("width", 1.0))
        x0 = float(params.get("x0", 0.0))
        _check_plateau(plateau)
        z = np.clip((x - x0) / width, -700.0, 700.0)
        values = plateau / (1.0 + np.exp(z))
        return Field(grid, values, plateau, 0.0, {"kind": kind, "plateau": plateau})
    raise BadParameter(f"unknown front datum kind {kind!r}")


def _check_plateau(value):
    if not 0.0 < value < 1.0:
        raise BadParameter(f"plateau value must lie in (0, 1), got {value}")


def _far_field_columns(kernel: Kernel, grid: Grid):
    i = np.arange(grid.n)
    from_left = kernel.right_tail((i + 0.5) * grid.h)
    from_right = kernel.left_tail((grid.n - 1 - i + 0.5) * grid.h)
    return from_left, from_right


def _check_compatible(field: Field, disc: KernelDiscretization):
    if not np.isclose(field.grid.h, disc.h, rtol=1e-12, atol=0.0):
        raise GridMismatch(f"field spacing {field.grid.h} != kernel spacing {disc.h}")
    if disc.K < field.grid.n - 1:
        raise GridMismatch(
            f"kernel discretised for {disc.K + 1} points, field has {field.grid.n}"
        )


class Convolver:
    """Caches the weights and far-field columns for repeated products."""

    def __init__(self, kernel: Kernel, grid: Grid, disc: KernelDiscretization | None = None):
        self.kernel = kernel
        self.grid = grid
        self.disc = disc if disc is not None else discretize(kernel, grid)
        n = grid.n
        K = self.disc.K
        self.weights = self.disc.weights[K - (n - 1): K + n]
        self.from_left, self.from_right = _far_field_columns(kernel, grid)

    def apply(self, values, u_left: float, u_right: float) -> np.ndarray:
        n = self.grid.n
        core = fftconvolve(values, self.weights)[n - 1: 2 * n - 1]
        return core + u_left * self.from_left + u_right * self.from_right

    def apply_linear(self, values) -> np.ndarray:
        """Convolution part only (zero far field), used for Jacobian products."""
        n = self.grid.n
        return fftconvolve(values, self.weights)[n - 1: 2 * n - 1]


def convolve(field: Field, disc: KernelDiscretization) -> Field:
    _check_compatible(field, disc)
    conv = Convolver(disc.kernel, field.grid, disc)
    out = conv.apply(field.values, field.u_left, field.u_right)
    return field.with_values(out)


def convolve_reference(field: Field, kernel: Kernel) -> Field:
    """Direct O(n^2) sum of cell masses; independent of the FFT path."""
    grid = field.grid
    h = grid.h
    n = grid.n
    u = field.values
    out = np.empty(n)
    j = np.arange(n)
    for i in range(n):
        off = (i - j) * h
        w = kernel.mass_between(off - 0.5 * h, off + 0.5 * h)
        left = field.u_left * float(kernel.right_tail((i + 0.5) * h))
        right = field.u_right * float(kernel.left_tail((n - 1 - i + 0.5) * h))
        out[i] = math.fsum((w * u).tolist()) + left + right
    return field.with_values(out)


def write_field_csv(path, field: Field, column: str = "u") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", column])
        for xi, ui in zip(field.grid.x, field.values):
            writer.writerow([repr(float(xi)), repr(float(ui))])


def read_field_csv(path, u_left: float, u_right: float) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x, u = data[:, 0], data[:, 1]
    h = float(x[1] - x[0])
    grid = Grid(float(x[0]), h, len(x))
    return Field(grid, u, u_left, u_right)
