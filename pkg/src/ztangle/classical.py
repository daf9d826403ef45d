"""Quasi-classical layer for the fishing-net model.

Log-weights become the Lagrangian ``L_a(x, y) = a ln|x - y| - (a/2) ln|a|``
and crossing collapses to ``Lbar_a = L_{-a}``.  An edge of the spin graph
with rapidity difference ``a`` therefore contributes ``L_c`` with
coefficient ``c = a`` (plain) or ``c = -a`` (barred), and stationarity at
a vertex reads ``sum_c c / (x_v - x_u) = 0`` over its edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .flips import FlipRequest, TEMPLATES, apply_flip
from .surface import Coord3, EdgeKind, EdgeSpec, SpinGraph, Surface, derive_spin_graph

LAPLACE_TOL = 1e-10
MAX_ITER = 100
NEIGHBOR_MEAN = "neighbor_mean"
# initial offsets, in units of the neighbour spread, tried after the plain mean
RESTART_OFFSETS = (-0.25, 0.25, -0.5, 0.5, -1.0, 1.0, -2.0, 2.0)
# probes for a flat spin sit around the old-neighbour mean plus this shift;
# the bare mean makes the second new vertex's legs symmetric (D = 0)
FLAT_PROBE_SHIFT = 0.37


class ClassicalError(ValueError):
    pass


class PoleError(ClassicalError):
    pass


class SolutionAtInfinity(ClassicalError):
    pass


def lagrangian(alpha: float, x: float, y: float) -> float:
    """alpha ln|x - y| - (alpha/2) ln|alpha|, with the alpha -> 0 limit 0."""
    if x == y:
        raise PoleError("coincident fields in a Lagrangian")
    if alpha == 0:
        return 0.0
    return alpha * math.log(abs(x - y)) - 0.5 * alpha * math.log(abs(alpha))


def lagrangian_bar(alpha: float, x: float, y: float) -> float:
    return lagrangian(-alpha, x, y)


def edge_coefficient(e: EdgeSpec) -> float:
    a = e.rho_a - e.rho_b
    return a if e.kind is EdgeKind.PLAIN else -a


# -- three legs ---------------------------------------------------------------

def three_leg_residual(x0: float, x1: float, x2: float, x3: float, alpha: float, beta: float) -> float:
    return alpha / (x1 - x0) - (alpha + beta) / (x2 - x0) + beta / (x3 - x0)


def three_leg_solve(x1: float, x2: float, x3: float, alpha: float, beta: float) -> float:
    """The unique finite root x0 of the three-leg equation."""
    scale = (abs(alpha) + abs(beta)) * max(1.0, abs(x1), abs(x2), abs(x3))
    den = -alpha * x1 + (alpha + beta) * x2 - beta * x3
    if abs(den) <= 1e-12 * scale:
        raise SolutionAtInfinity(f"three-leg solution at infinity for ({x1}, {x2}, {x3}; {alpha}, {beta})")
    x0 = (alpha * x2 * x3 - (alpha + beta) * x1 * x3 + beta * x1 * x2) / den
    for xi in (x1, x2, x3):
        if abs(x0 - xi) <= 1e-12 * max(1.0, abs(xi)):
            raise PoleError(f"three-leg solution {x0} coincides with a leg value")
    return x0


def solve_legs(values: Sequence[float], coefficients: Sequence[float]) -> float:
    """Root of sum c_k / (x - u_k) = 0 for three legs with sum c_k = 0."""
    if len(values) != 3:
        raise ClassicalError(f"expected three legs, got {len(values)}")
    c1, c2, c3 = coefficients
    if abs(c1 + c2 + c3) > 1e-12 * max(1.0, abs(c1), abs(c2), abs(c3)):
        raise ClassicalError("leg coefficients do not sum to zero")
    # sum c_k/(x - u_k) = -(c1/(u1-x) + c2/(u2-x) + c3/(u3-x)) matches alpha=c1, beta=c3
    return three_leg_solve(values[0], values[1], values[2], c1, c3)


def check_classical_str(x1: float, x2: float, x3: float, alpha: float, beta: float) -> float:
    """|star - triangle| with the star centre at its three-leg solution."""
    x0 = three_leg_solve(x1, x2, x3, alpha, beta)
    L = lagrangian
    lhs = L(alpha, x1, x0) - L(alpha + beta, x2, x0) + L(beta, x3, x0)
    rhs = -L(alpha, x2, x3) + L(alpha + beta, x1, x3) - L(beta, x1, x2)
    return abs(lhs - rhs)


def check_closure(x13: float, x23: float, x12: float, p: float, q: float, r: float) -> float:
    """|sum of the three directional differences| around one cube corner.

    The corner value solves the saddle equation of the three legs meeting
    it, then the differences along i, j and k are summed.
    """
    L = lagrangian

    def Lbar(a, x, y):
        return L(-a, x, y)
    x = three_leg_solve(x13, x23, x12, r - q, q - p)
    d_i = Lbar(p - r, x13, x12) - L(p - r, x23, x)
    d_j = L(q - r, x23, x12) - Lbar(q - r, x13, x)
    d_k = L(p - q, x23, x13) - Lbar(p - q, x, x12)
    return abs(d_i + d_j + d_k)


# -- action and Laplace system -------------------------------------------------

Field = Dict[Coord3, float]


def action_value(g: SpinGraph, field: Mapping[Coord3, float]) -> float:
    total = 0.0
    for e in g.edges:
        try:
            total += lagrangian(edge_coefficient(e), field[e.x_first], field[e.x_second])
        except KeyError as exc:
            raise ClassicalError(f"field has no value at {list(exc.args[0])}") from None
    return total


def _legs(g: SpinGraph) -> Dict[Coord3, List[Tuple[Coord3, float]]]:
    legs: Dict[Coord3, List[Tuple[Coord3, float]]] = {v: [] for v in g.black_vertices}
    for e in g.edges:
        c = edge_coefficient(e)
        legs[e.x_first].append((e.x_second, c))
        legs[e.x_second].append((e.x_first, c))
    return legs


def flat_vertices(g: SpinGraph, tol: float = 1e-14) -> List[Coord3]:
    """Interior vertices on which the action does not depend at all."""
    out = []
    for v, legs in _legs(g).items():
        if v not in g.interior:
            continue
        per_nbr: Dict[Coord3, float] = {}
        for u, c in legs:
            per_nbr[u] = per_nbr.get(u, 0.0) + c
        if all(abs(c) <= tol for c in per_nbr.values()):
            out.append(v)
    return sorted(out)


def gradient(g: SpinGraph, field: Mapping[Coord3, float], unknowns: Sequence[Coord3]) -> np.ndarray:
    legs = _legs(g)
    return np.array([sum(c / (field[v] - field[u]) for u, c in legs[v]) for v in unknowns])


def jacobian(g: SpinGraph, field: Mapping[Coord3, float], unknowns: Sequence[Coord3]) -> np.ndarray:
    legs = _legs(g)
    slot = {v: m for m, v in enumerate(unknowns)}
    J = np.zeros((len(unknowns), len(unknowns)))
    for m, v in enumerate(unknowns):
        for u, c in legs[v]:
            d = c / (field[v] - field[u]) ** 2
            J[m, m] -= d
            if u in slot:
                J[m, slot[u]] += d
    return J


@dataclass
class LaplaceReport:
    converged: bool
    iterations: int
    residual_sup: float
    field: Field
    action: float
    flat: List[Coord3] = field(default_factory=list)
    singular: bool = False
    restarts: int = 0
    trace: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        from .partition import dump_vertex_map
        return {"check": "laplace", "converged": self.converged, "iterations": self.iterations,
                "residual_sup": self.residual_sup, "action": self.action, "singular": self.singular,
                "restarts": self.restarts, "flat": [list(v) for v in self.flat],
                "field": dump_vertex_map(self.field), "trace": self.trace}


def _newton(g, field, unknowns, tol, max_iter, bound):
    res = np.inf
    step = np.inf
    for it in range(1, max_iter + 1):
        try:
            F = gradient(g, field, unknowns)
        except ZeroDivisionError:
            return False, it, np.inf, "pole"
        res = float(np.max(np.abs(F)))
        if res < tol and step < 1e-6 * bound:
            return True, it - 1, res, "ok"
        J = jacobian(g, field, unknowns)
        try:
            if not np.all(np.isfinite(J)) or abs(np.linalg.det(J)) < 1e-300:
                raise np.linalg.LinAlgError
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return False, it, res, "singular Jacobian"
        for v, d in zip(unknowns, dx):
            field[v] += float(d)
        step = float(np.max(np.abs(dx)))
        if not all(math.isfinite(field[v]) and abs(field[v]) < bound for v in unknowns):
            return False, it, res, "diverged"
    F = gradient(g, field, unknowns)
    res = float(np.max(np.abs(F)))
    return res < tol and step < 1e-6 * bound, max_iter, res, "iteration cap"


def solve_laplace(g: SpinGraph, boundary: Mapping[Coord3, float],
                  init: Union[str, Mapping[Coord3, float]] = NEIGHBOR_MEAN,
                  tol: float = LAPLACE_TOL, max_iter: int = MAX_ITER) -> LaplaceReport:
    """Newton iteration on the stationarity equations of the interior fields.

    With the default initializer every interior field starts at the mean of
    its boundary neighbours.  If Newton fails from there, the start is
    shifted by fixed multiples of the neighbour spread (``RESTART_OFFSETS``,
    negative first), so the root reached is deterministic.  Flat vertices
    are excluded and keep their initial value.
    """
    boundary = {tuple(k): float(v) for k, v in boundary.items()}
    missing = [v for v in g.boundary if v not in boundary]
    if missing:
        raise ClassicalError(f"boundary incomplete: no value at {list(missing[0])}")
    if not g.interior:
        raise ClassicalError("graph has no interior vertices")
    flat = flat_vertices(g)
    unknowns = [v for v in g.interior if v not in flat]
    legs = _legs(g)
    bvals = list(boundary.values())
    spread = (max(bvals) - min(bvals)) or 1.0
    bound = 1e6 * max(1.0, max(abs(b) for b in bvals))

    if isinstance(init, str):
        if init != NEIGHBOR_MEAN:
            raise ClassicalError(f"unknown initializer {init!r}")
        base: Field = {}
        overall = float(np.mean(bvals))
        for v in g.interior:
            vals = [boundary[u] for u, _ in legs[v] if u in boundary]
            base[v] = float(np.mean(vals)) if vals else overall
        starts = [0.0] + [o * spread for o in RESTART_OFFSETS]
    else:
        base = {tuple(k): float(x) for k, x in init.items()}
        if any(v not in base for v in g.interior):
            raise ClassicalError("explicit initial field must cover every interior vertex")
        starts = [0.0]

    trace = []
    best = None
    for m, shift in enumerate(starts):
        field = dict(boundary)
        for v in g.interior:
            field[v] = base[v] + (shift if v in unknowns else 0.0)
        if not unknowns:
            return LaplaceReport(True, 0, 0.0, field, action_value(g, field), flat, False, 0, trace)
        ok, its, res, why = _newton(g, field, unknowns, tol, max_iter, bound)
        trace.append(f"start {m} (shift {shift:+.4g}): {why} after {its} iterations, residual {res:.3e}")
        if ok:
            return LaplaceReport(True, its, res, field, action_value(g, field), flat, False, m, trace)
        if best is None:
            best = (its, res, field, why)
    its, res, field, why = best
    try:
        act = action_value(g, field)
    except (ClassicalError, ValueError):
        act = math.nan
    return LaplaceReport(False, its, res, field, act, flat, why == "singular Jacobian", len(starts) - 1, trace)


# -- classical Z-invariance ---------------------------------------------------

@dataclass
class ClassicalZReport:
    action0: float
    action: float
    delta: float
    flat_spread: float
    laplace: LaplaceReport
    field: Field
    tolerance: float = 1e-9

    @property
    def ok(self) -> bool:
        return self.laplace.converged and self.delta < self.tolerance and self.flat_spread < 1e-10

    def to_dict(self) -> dict:
        from .partition import dump_vertex_map
        return {"check": "classical-zinv", "action0": self.action0, "action": self.action,
                "delta": self.delta, "flat_spread": self.flat_spread,
                "field": dump_vertex_map(self.field), "tolerance": self.tolerance, "pass": self.ok}


def _propagate(s: Surface, field: Field, req: FlipRequest, probe_offset: float) -> Tuple[Surface, Field]:
    new, _ = apply_flip(s, req.kind, req.anchor, req.r_value, req.direction)
    g = derive_spin_graph(new)
    legs = _legs(g)
    field = {v: x for v, x in field.items() if v in g.black_vertices}
    fresh = sorted(v for v in g.black_vertices if v not in field)
    if len(fresh) == 2:
        # a 1 <-> 5 flip leaves a one-parameter family of stationary points:
        # fix one new field at a probe value and solve the other
        a, b = fresh
        old = [field[u] for u, _ in legs[a] if u in field]
        field[a] = float(np.mean(old)) + FLAT_PROBE_SHIFT + probe_offset
        fresh = [b]
    for v in fresh:
        vals = [field[u] for u, _ in legs[v]]
        coeffs = [c for _, c in legs[v]]
        field[v] = solve_legs(vals, coeffs)
    return new, field


def check_classical_zinvariance(s0: Surface, script: Sequence[FlipRequest], boundary: Mapping[Coord3, float],
                                probes: Sequence[float] = (-1.0, 0.0, 1.0), tolerance: float = 1e-9,
                                init: Union[str, Mapping[Coord3, float]] = NEIGHBOR_MEAN) -> ClassicalZReport:
    """Action on ``s0`` at its Laplace solution against the action after the script.

    New fields are set constructively: one three-leg solve per vertex
    created by a 2 <-> 4 or 3 <-> 3 flip, and a probe plus one solve for the
    two vertices of a 1 <-> 5 flip.  The script is replayed once per probe
    offset; ``flat_spread`` is the spread of the final action over probes.
    """
    script = [FlipRequest.from_dict(r) if isinstance(r, Mapping) else r for r in script]
    g0 = derive_spin_graph(s0)
    lap = solve_laplace(g0, boundary, init)
    a0 = lap.action
    if not lap.converged:
        return ClassicalZReport(a0, math.nan, math.inf, math.inf, lap, lap.field, tolerance)
    has_flat = any(TEMPLATES[r.kind].family == "F15" and r.direction.value == "forward" for r in script)
    actions, final_field = [], lap.field
    for off in (probes if has_flat else probes[:1]):
        s, field = s0, dict(lap.field)
        for req in script:
            s, field = _propagate(s, field, req, off)
        actions.append(action_value(derive_spin_graph(s), field))
        if off == 0.0 or len(actions) == 1:
            final_field = field
    spread = max(actions) - min(actions)
    a = actions[0]
    return ClassicalZReport(a0, a, abs(a - a0), spread, lap, final_field, tolerance)
