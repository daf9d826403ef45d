"""Spin-model weight families.

Two plugins are shipped: the critical Ising coupling on Z_2 (discrete)
and the fishing-net model with real spins (continuous).  Both expose the
same interface so the relation checkers and the partition engine never
branch on the concrete model beyond its domain.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import gamma

from .surface import EdgeKind

SINGULAR_TOL = 1e-12


class ModelDomainError(ValueError):
    """Rapidities or spins outside the range where a weight is finite."""


class PoleError(ModelDomainError):
    """Two adjacent continuous spins coincide."""


class Domain(str, enum.Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


def ising_coupling(theta: float) -> complex:
    """Coupling J with sinh(2J) = tan(theta), principal complex branch."""
    c = math.cos(theta)
    if abs(c) < SINGULAR_TOL:
        raise ModelDomainError(f"singular Ising angle {theta!r} (cos = 0)")
    return 0.5 * cmath.log(complex((1.0 + math.sin(theta)) / c))


def _ising_angle(kind: EdgeKind, a: float) -> float:
    return a if EdgeKind(kind) is EdgeKind.PLAIN else math.pi / 2 - a


def ising_weight(kind: EdgeKind, a: float, x: int, y: int) -> complex:
    """exp(J(theta) x y); theta = a for plain edges, pi/2 - a for barred ones."""
    return cmath.exp(ising_coupling(_ising_angle(kind, a)) * x * y)


def fishingnet_weight(kind: EdgeKind, alpha: float, x: float, y: float) -> float:
    """|x - y|^(-alpha/pi); a barred edge uses pi - alpha."""
    if x == y:
        raise PoleError("coincident spins on a fishing-net edge")
    if EdgeKind(kind) is EdgeKind.BARRED:
        alpha = math.pi - alpha
    return abs(x - y) ** (-alpha / math.pi)


def fishingnet_R(alpha: float, beta: float) -> float:
    """Spin-independent star-triangle factor of the fishing-net model."""
    if not (alpha > 0 and beta > 0 and alpha + beta < math.pi):
        raise ModelDomainError(f"(alpha, beta) = ({alpha}, {beta}) outside 0 < alpha, beta, alpha+beta < pi")
    if math.pi - alpha - beta < 1e-12:
        raise ModelDomainError("alpha + beta = pi hits a gamma-function pole")
    t = 2 * math.pi
    num = gamma(alpha / t) * gamma((math.pi - alpha - beta) / t) * gamma(beta / t)
    den = gamma((math.pi - alpha) / t) * gamma((alpha + beta) / t) * gamma((math.pi - beta) / t)
    return float(math.sqrt(math.pi) * num / den)


@dataclass(frozen=True)
class SpinModel:
    """A weight family together with its spin domain.

    ``modulus`` is the number of spin states for discrete models and
    ``spins`` their values; continuous models leave both unset.
    """

    name: str
    domain: Domain
    crossing_eta: float
    modulus: Optional[int] = None
    spins: Tuple[float, ...] = ()

    @property
    def is_discrete(self) -> bool:
        return self.domain is Domain.DISCRETE

    def weight(self, kind: EdgeKind, rho_a: float, rho_b: float, x, y) -> complex:
        alpha = rho_a - rho_b
        if self.name == "ising":
            return ising_weight(kind, alpha, x, y)
        return complex(fishingnet_weight(kind, alpha, x, y))

    def s_weight(self, x) -> complex:
        return 1.0 + 0j

    def spin_sum(self) -> complex:
        """Sum of S over all spin values (discrete models only)."""
        if not self.is_discrete:
            raise ModelDomainError(f"sum of S over real spins diverges for {self.name}")
        return complex(sum(self.s_weight(x) for x in self.spins))

    def validity(self, rho_a: float, rho_b: float) -> bool:
        alpha = rho_a - rho_b
        if self.name == "ising":
            return all(abs(math.cos(t)) > SINGULAR_TOL for t in (alpha, math.pi / 2 - alpha))
        return 0 < alpha < math.pi

    def edge_table(self, kind: EdgeKind, rho_a: float, rho_b: float) -> np.ndarray:
        """N x N array of weight(kind, rho_a, rho_b, spins[u], spins[v])."""
        if not self.is_discrete:
            raise ModelDomainError("edge tables exist only for discrete models")
        s = self.spins
        return np.array([[self.weight(kind, rho_a, rho_b, x, y) for y in s] for x in s], dtype=complex)


ISING = SpinModel("ising", Domain.DISCRETE, math.pi / 2, 2, (1, -1))
FISHINGNET = SpinModel("fishingnet", Domain.CONTINUOUS, math.pi)

MODELS = {"ising": ISING, "fishingnet": FISHINGNET}


def get_model(name: str) -> SpinModel:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


def ising_fpair(a: float) -> complex:
    """Closed form of the inversion constant f_pq f_qp = 2 i cot(a)."""
    return 2j / math.tan(a)

