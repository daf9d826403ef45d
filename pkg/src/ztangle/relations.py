"""Numerical checks of the star-triangle, inversion and three-square identities.

Spin-independent factors (R and the inversion constant) are extracted
from the weights themselves rather than hard-coded per model, so every
check here doubles as an oracle for the factor ledger of the flips.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .models import ModelDomainError, SpinModel
from .surface import EdgeKind

PLAIN, BARRED = EdgeKind.PLAIN, EdgeKind.BARRED

DISCRETE_TOL = 1e-12
CONTINUOUS_TOL = 1e-6
QUAD_EPSREL = 1e-10


class Form(str, enum.Enum):
    FIRST = "first"
    SECOND = "second"


class RelationError(ValueError):
    pass


class UnsupportedRelation(RelationError):
    pass


@dataclass(frozen=True)
class STRReport:
    form: Form
    max_rel_residual: float
    extracted_R: complex
    R_spread: float
    configs_checked: int
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_rel_residual < self.tolerance and self.R_spread < self.tolerance

    def to_dict(self) -> dict:
        return {"check": "str", "form": self.form.value, "residual": self.max_rel_residual,
                "R": {"re": self.extracted_R.real, "im": self.extracted_R.imag},
                "R_spread": self.R_spread, "configs": self.configs_checked,
                "tolerance": self.tolerance, "pass": self.ok}


@dataclass(frozen=True)
class InversionReport:
    relation1_residual: float
    relation2_offdiag: Optional[float] = None
    f_pair: Optional[complex] = None
    f_pair_spread: Optional[float] = None
    tolerance: float = DISCRETE_TOL

    @property
    def ok(self) -> bool:
        checks = [self.relation1_residual < self.tolerance]
        if self.relation2_offdiag is not None:
            checks += [self.relation2_offdiag < self.tolerance, self.f_pair_spread < self.tolerance]
        return all(checks)

    def to_dict(self) -> dict:
        out = {"check": "inversion", "relation1_residual": self.relation1_residual,
               "tolerance": self.tolerance, "pass": self.ok}
        if self.f_pair is not None:
            out.update(relation2_offdiag=self.relation2_offdiag, f_pair_spread=self.f_pair_spread,
                       f_pair={"re": self.f_pair.real, "im": self.f_pair.imag})
        return out


# -- star-triangle ------------------------------------------------------------

def _star_factors(form: Form, p, q, r, x0, x1, x2, x3):
    """The three (kind, rho_a, rho_b, u, v) star legs around x0."""
    if form is Form.FIRST:
        return ((BARRED, q, r, x1, x0), (PLAIN, p, r, x2, x0), (BARRED, p, q, x0, x3))
    return ((BARRED, q, r, x0, x1), (PLAIN, p, r, x0, x2), (BARRED, p, q, x3, x0))


def _triangle_factors(form: Form, p, q, r, x1, x2, x3):
    if form is Form.FIRST:
        return ((PLAIN, q, r, x2, x3), (BARRED, p, r, x1, x3), (PLAIN, p, q, x2, x1))
    return ((PLAIN, q, r, x3, x2), (BARRED, p, r, x3, x1), (PLAIN, p, q, x1, x2))


def _product(model: SpinModel, legs) -> complex:
    out = 1.0 + 0j
    for kind, a, b, u, v in legs:
        out *= model.weight(kind, a, b, u, v)
    return out


def star_value(model: SpinModel, p, q, r, boundary, form: Form = Form.SECOND) -> complex:
    """Sum (or integral) over the central spin of the three-leg star."""
    x1, x2, x3 = boundary
    form = Form(form)
    if model.is_discrete:
        return sum(model.s_weight(x0) * _product(model, _star_factors(form, p, q, r, x0, x1, x2, x3))
                   for x0 in model.spins)

    def integrand(x0):
        return (model.s_weight(x0) * _product(model, _star_factors(form, p, q, r, x0, x1, x2, x3))).real
    return complex(integrate_real_line(integrand, boundary))


def triangle_value(model: SpinModel, p, q, r, boundary, form: Form = Form.SECOND) -> complex:
    x1, x2, x3 = boundary
    return _product(model, _triangle_factors(Form(form), p, q, r, x1, x2, x3))


def integrate_real_line(func, singular_points: Iterable[float], epsrel: float = QUAD_EPSREL) -> float:
    """Integral of ``func`` over R with integrable point singularities.

    Uses x = tan(t) and integrates each piece between consecutive images
    of the singular points separately, so every singularity sits at an
    endpoint where the adaptive rule extrapolates well.
    """
    cuts = sorted(set(math.atan(x) for x in singular_points))
    edges = [-math.pi / 2] + cuts + [math.pi / 2]

    def g(t):
        c = math.cos(t)
        if c == 0.0:
            return 0.0
        return func(math.tan(t)) / (c * c)

    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0:
            continue
        val, err, *info = integrate.quad(g, a, b, epsabs=0.0, epsrel=epsrel, limit=400, full_output=1)
        if len(info) > 1 and "convergence" in str(info[1]).lower() and err > 1e-6 * max(abs(val), 1e-300):
            raise RelationError(f"quadrature did not converge on ({a:.3f}, {b:.3f}): {info[1]}")
        total += val
    return total


def default_probe(model: SpinModel) -> List[Tuple]:
    if model.is_discrete:
        return list(itertools.product(model.spins, repeat=3))
    return [(0.0, 1.0, 3.0)]


def check_str(model: SpinModel, p: float, q: float, r: float, form: Form = Form.SECOND,
              probe: Optional[Sequence[Tuple]] = None, tolerance: Optional[float] = None) -> STRReport:
    """Compare star and triangle over boundary configurations and extract R."""
    form = Form(form)
    if model.is_discrete:
        # discrete checks are always exhaustive
        configs = default_probe(model)
    else:
        configs = list(probe) if probe is not None else default_probe(model)
    if tolerance is None:
        tolerance = DISCRETE_TOL if model.is_discrete else CONTINUOUS_TOL
    lhs = np.array([star_value(model, p, q, r, c, form) for c in configs])
    rhs = np.array([triangle_value(model, p, q, r, c, form) for c in configs])
    if np.any(np.abs(rhs) < 1e-300):
        raise RelationError("triangle vanishes at some configuration (degenerate rapidities)")
    ratios = lhs / rhs
    R = complex(ratios[0])
    residual = float(np.max(np.abs(lhs - R * rhs)) / np.max(np.abs(lhs)))
    spread = float(np.max(np.abs(ratios - R)) / abs(R))
    return STRReport(form, residual, R, spread, len(configs), tolerance)


def extract_R(model: SpinModel, p: float, q: float, r: float) -> complex:
    return check_str(model, p, q, r, Form.SECOND).extracted_R


# -- inversion ----------------------------------------------------------------

def check_inversions(model: SpinModel, p: float, q: float, second: Optional[bool] = None,
                     samples: Optional[Sequence[Tuple[float, float]]] = None,
                     tolerance: float = DISCRETE_TOL) -> InversionReport:
    """Both inversion relations; the second only for discrete spins."""
    if second is None:
        second = model.is_discrete
    if second and not model.is_discrete:
        raise UnsupportedRelation("the second inversion relation is a distributional identity "
                                  "(delta function) for continuous spins")
    if model.is_discrete:
        pairs = list(itertools.product(model.spins, repeat=2))
    else:
        pairs = list(samples) if samples is not None else [(0.0, 1.0), (-0.3, 2.5), (1.7, -4.0)]
    rel1 = max(abs(model.weight(PLAIN, p, q, x, y) * model.weight(PLAIN, q, p, x, y) - 1.0)
               for x, y in pairs)
    if not second:
        return InversionReport(rel1, tolerance=tolerance)

    def bubble(x, y):
        return sum(model.weight(BARRED, p, q, x, x0) * model.s_weight(x0) * model.weight(BARRED, q, p, x0, y)
                   for x0 in model.spins)

    off = max((abs(bubble(x, y)) for x, y in pairs if x != y), default=0.0)
    diag = [model.s_weight(x) * bubble(x, x) for x in model.spins]
    f_pair = complex(diag[0])
    spread = max(abs(d - f_pair) for d in diag) / abs(f_pair)
    return InversionReport(rel1, off, f_pair, spread, tolerance)


def extract_fpair(model: SpinModel, p: float, q: float) -> complex:
    return check_inversions(model, p, q, second=True).f_pair


# -- three-square identity ----------------------------------------------------

def _str0_inner(model: SpinModel, p, q, r, x, xp, xpp, xppp, x1, x2, x4) -> complex:
    legs = ((PLAIN, r, p, x, x1), (BARRED, r, q, x1, xpp), (PLAIN, p, q, x, xpp), (BARRED, p, r, xpp, x2),
            (PLAIN, q, r, xp, x4), (BARRED, r, q, x2, xppp), (PLAIN, p, q, xp, xppp), (BARRED, p, r, xppp, x4))
    s = model.s_weight
    return s(x) * s(xp) * s(xpp) * s(xppp) * _product(model, legs)


def str0_sides(model: SpinModel, p, q, r, boundary, x2) -> Tuple[complex, complex]:
    """Both quadruple sums of the three-square identity, without the constant."""
    x1, x3, x4 = boundary
    lhs = rhs = 0j
    for x, xp, xpp, xppp in itertools.product(model.spins, repeat=4):
        f = _str0_inner(model, p, q, r, x, xp, xpp, xppp, x1, x2, x4)
        lhs += f * _product(model, ((BARRED, p, q, x, xp), (BARRED, r, p, x3, x), (BARRED, q, r, xp, x3)))
        rhs += f * _product(model, ((PLAIN, r, p, xp, x2), (PLAIN, q, r, x, x2), (PLAIN, p, q, x3, x2)))
    return lhs, rhs


def str0_constant(model: SpinModel, p, q, r, x3, spin_sum_power: int = 2) -> complex:
    """R_rpq f_qr f_rq / S(x3) / (sum S)^power, with delta = 1.

    The identity balances with power 2; ``spin_sum_power=1`` gives the
    constant exactly as printed, which is off by a factor N.
    """
    R = extract_R(model, r, p, q)
    fp = extract_fpair(model, q, r)
    return R * fp / model.s_weight(x3) / model.spin_sum() ** spin_sum_power


def check_str0(model: SpinModel, p: float, q: float, r: float, boundary: Tuple, spin_sum_power: int = 2) -> float:
    """Relative residual of the three-square identity, maximised over x2."""
    if not model.is_discrete:
        raise UnsupportedRelation("the three-square identity is defined for discrete spins only")
    x1, x3, x4 = boundary
    C = str0_constant(model, p, q, r, x3, spin_sum_power)
    worst = 0.0
    for x2 in model.spins:
        lhs, rhs = str0_sides(model, p, q, r, boundary, x2)
        worst = max(worst, abs(lhs - C * rhs) / abs(lhs))
    return worst
