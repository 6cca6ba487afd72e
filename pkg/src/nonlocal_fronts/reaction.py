"""Reaction terms: degenerate monostable families and their ignition cut-offs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BadParameter


class ReactionFamily(str, Enum):
    POWER = "power"
    ZELDOVICH = "zeldovich"
    IGNITION = "ignition"
    BISTABLE = "bistable"
    ZERO = "zero"


@dataclass(frozen=True)
class Nonlinearity:
    """``f`` on ``[0, 1]``, extended by zero for negative arguments.

    ``power``      r u^beta (1 - u)
    ``zeldovich``  r exp(-1/u) (1 - u)
    ``ignition``   r (u - theta)_+^beta (1 - u), so it vanishes on [0, theta] and at 1
                   and sits below the ``power`` term with the same (r, beta)
    ``bistable``   r u (1 - u) (u - theta)
    ``zero``       f = 0 (pure dispersal)
    """

    family: ReactionFamily
    r: float = 1.0
    beta: float = 2.0
    theta: float = 0.0
    lipschitz: float = 0.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        up = np.maximum(u, 0.0)
        fam = self.family
        if fam is ReactionFamily.POWER:
            return self.r * up**self.beta * (1.0 - u)
        if fam is ReactionFamily.ZELDOVICH:
            with np.errstate(divide="ignore", over="ignore"):
                e = np.where(up > 0, np.exp(-1.0 / np.where(up > 0, up, 1.0)), 0.0)
            return self.r * e * (1.0 - u)
        if fam is ReactionFamily.IGNITION:
            s = np.maximum(u - self.theta, 0.0)
            return self.r * s**self.beta * (1.0 - u)
        if fam is ReactionFamily.BISTABLE:
            return np.where(u > 0, self.r * u * (1.0 - u) * (u - self.theta), 0.0)
        return np.zeros_like(u)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        up = np.maximum(u, 0.0)
        fam = self.family
        if fam is ReactionFamily.POWER:
            b = self.beta
            return self.r * (b * up ** (b - 1.0) * (1.0 - u) - up**b)
        if fam is ReactionFamily.ZELDOVICH:
            safe = np.where(up > 0, up, 1.0)
            e = np.where(up > 0, np.exp(-1.0 / safe), 0.0)
            return self.r * e * ((1.0 - u) / safe**2 - 1.0)
        if fam is ReactionFamily.IGNITION:
            b = self.beta
            s = np.maximum(u - self.theta, 0.0)
            return self.r * (b * s ** (b - 1.0) * (1.0 - u) - s**b)
        if fam is ReactionFamily.BISTABLE:
            th = self.theta
            val = self.r * (-3.0 * u**2 + 2.0 * (1.0 + th) * u - th)
            return np.where(u > 0, val, 0.0)
        return np.zeros_like(u)

    @property
    def leading_exponent(self) -> float:
        """``beta`` in ``f(u) ~ r u^beta`` at 0; ``inf`` when f vanishes faster."""
        if self.family is ReactionFamily.POWER:
            return self.beta
        if self.family in (ReactionFamily.ZELDOVICH, ReactionFamily.IGNITION):
            return math.inf
        if self.family is ReactionFamily.BISTABLE:
            return 1.0
        return math.inf

    @property
    def monostable(self) -> bool:
        return self.family in (ReactionFamily.POWER, ReactionFamily.ZELDOVICH)

    def base(self) -> "Nonlinearity":
        """The monostable term an ignition cut-off was derived from."""
        if self.family is ReactionFamily.IGNITION:
            return make_nonlinearity("power", r=self.r, beta=self.beta)
        return self

    def with_threshold(self, theta: float) -> "Nonlinearity":
        return make_nonlinearity("ignition", r=self.r, beta=self.beta, theta=theta)

    def to_config(self) -> dict:
        cfg = {"family": self.family.value}
        if self.family is not ReactionFamily.ZERO:
            cfg["r"] = self.r
        if self.family in (ReactionFamily.POWER, ReactionFamily.IGNITION):
            cfg["beta"] = self.beta
        if self.family in (ReactionFamily.IGNITION, ReactionFamily.BISTABLE):
            cfg["theta"] = self.theta
        return cfg


def _sampled_lipschitz(nl: Nonlinearity, samples: int = 200_001) -> float:
    u = np.linspace(0.0, 1.0, samples)
    return 1.1 * float(np.max(np.abs(nl.derivative(u))))


def lipschitz_bound(nl: Nonlinearity) -> float:
    """Upper bound for ``sup |f'|`` on [0, 1].

    For ``power``: f' = r u^(beta-1) (beta - (beta+1) u) peaks at
    u = (beta-1)/(beta+1) with value r u^(beta-1) < r, and |f'(1)| = r.
    """
    if nl.family is ReactionFamily.ZERO:
        return 0.0
    if nl.family is ReactionFamily.POWER:
        b = nl.beta
        return nl.r * max(1.0, ((b - 1.0) / (b + 1.0)) ** (b - 1.0))
    return _sampled_lipschitz(nl)


def make_nonlinearity(family, **params) -> Nonlinearity:
    try:
        family = ReactionFamily(family)
    except ValueError:
        raise BadParameter(f"unknown reaction family {family!r}") from None
    allowed = {
        ReactionFamily.POWER: {"r", "beta"},
        ReactionFamily.ZELDOVICH: {"r"},
        ReactionFamily.IGNITION: {"r", "beta", "theta"},
        ReactionFamily.BISTABLE: {"r", "theta"},
        ReactionFamily.ZERO: set(),
    }[family]
    unknown = set(params) - allowed
    if unknown:
        raise BadParameter(f"unexpected {family.value} parameters {sorted(unknown)}")

    r = float(params.get("r", 1.0))
    beta = float(params.get("beta", 2.0))
    theta = float(params.get("theta", 0.0))
    if family is not ReactionFamily.ZERO and not r > 0:
        raise BadParameter(f"rate r must be positive, got {r}")
    if family in (ReactionFamily.POWER, ReactionFamily.IGNITION) and not beta > 1:
        raise BadParameter(f"beta must exceed 1 (degenerate case only), got {beta}")
    if family in (ReactionFamily.IGNITION, ReactionFamily.BISTABLE) and not 0 < theta < 1:
        raise BadParameter(f"theta must lie in (0, 1), got {theta}")
    if family is ReactionFamily.ZERO:
        r = 0.0

    nl = Nonlinearity(family, r=r, beta=beta, theta=theta)
    return Nonlinearity(family, r=r, beta=beta, theta=theta, lipschitz=lipschitz_bound(nl))


def nonlinearity_from_config(cfg: dict) -> Nonlinearity:
    cfg = dict(cfg)
    family = cfg.pop("family", "power")
    return make_nonlinearity(family, **cfg)
