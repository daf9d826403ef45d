"""Exact partition functions on spin graphs and the Z-invariance harness.

Discrete sums are brute force over all interior configurations.  The
configurations are enumerated in fixed-size blocks of mixed-radix
digits; each block is reduced with numpy's pairwise summation and the
block totals are combined in block order, so the result does not depend
on how many worker threads evaluated the blocks.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .flips import FactorLedger, FlipRequest, evaluate_ledger, run_script
from .models import ModelDomainError, SpinModel
from .relations import integrate_real_line
from .surface import Coord3, EdgeKind, SpinGraph, Surface, derive_spin_graph

BLOCK = 1 << 14
DEFAULT_CAP_BITS = 16
ZINV_TOL = 1e-10


class PartitionError(ValueError):
    pass


class BoundaryError(PartitionError):
    pass


def parse_vertex(key) -> Coord3:
    if isinstance(key, str):
        key = json.loads(key)
    v = tuple(int(c) for c in key)
    if len(v) != 3:
        raise BoundaryError(f"vertex {key!r} needs three coordinates")
    return v


def parse_boundary(data) -> Dict[Coord3, float]:
    """Boundary or field JSON: {"[i,j,k]": value, ...}."""
    if isinstance(data, str):
        data = json.loads(data)
    try:
        return {parse_vertex(k): v for k, v in data.items()}
    except (ValueError, TypeError, AttributeError) as exc:
        raise BoundaryError(f"malformed vertex map: {exc}") from exc


def dump_vertex_map(values: Mapping[Coord3, object]) -> dict:
    return {json.dumps(list(v), separators=(",", ":")): values[v] for v in sorted(values)}


def uniform_boundary(g: SpinGraph, value=1) -> Dict[Coord3, object]:
    return {v: value for v in g.boundary}


def thread_count() -> int:
    env = os.environ.get("ZTANGLE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise PartitionError(f"ZTANGLE_THREADS must be an integer, got {env!r}") from None
    return max(1, min(4, os.cpu_count() or 1))


def _check_boundary(g: SpinGraph, boundary: Mapping[Coord3, object]) -> None:
    missing = [v for v in g.boundary if v not in boundary]
    if missing:
        raise BoundaryError(f"boundary incomplete: no value for {list(missing[0])} "
                            f"({len(missing)} missing)")
    extra = [v for v in boundary if v not in set(g.boundary)]
    if extra:
        raise BoundaryError(f"{list(extra[0])} is not a boundary vertex of the graph")


def partition_function(g: SpinGraph, model: SpinModel, boundary: Mapping[Coord3, object],
                       max_interior: Optional[int] = None, threads: Optional[int] = None) -> complex:
    """Sum over interior spins of the product of edge weights and vertex weights."""
    boundary = {tuple(k): v for k, v in boundary.items()}
    _check_boundary(g, boundary)
    if model.is_discrete:
        return _discrete_z(g, model, boundary, max_interior, threads)
    return _continuous_z(g, model, boundary)


def _discrete_z(g, model, boundary, max_interior, threads) -> complex:
    N = model.modulus
    if max_interior is None:
        max_interior = int(DEFAULT_CAP_BITS * math.log(2) / math.log(N))
    n = len(g.interior)
    if n > max_interior:
        raise PartitionError(f"{n} interior spins exceed the cap of {max_interior}")
    index = {x: m for m, x in enumerate(model.spins)}
    try:
        fixed = {v: index[boundary[v]] for v in g.boundary}
    except KeyError as exc:
        raise BoundaryError(f"boundary spin {exc.args[0]!r} not in {model.spins}") from None
    slot = {v: m for m, v in enumerate(g.interior)}

    const = 1.0 + 0j
    pair_terms, single_terms = [], []
    tables = {}
    for e in g.edges:
        key = (e.kind, e.rho_a, e.rho_b)
        if key not in tables:
            tables[key] = model.edge_table(e.kind, e.rho_a, e.rho_b)
        t = tables[key]
        u, v = e.x_first, e.x_second
        if u in fixed and v in fixed:
            const *= t[fixed[u], fixed[v]]
        elif u in fixed:
            single_terms.append((slot[v], t[fixed[u], :]))
        elif v in fixed:
            single_terms.append((slot[u], t[:, fixed[v]]))
        else:
            pair_terms.append((slot[u], slot[v], t))
    s_table = np.array([model.s_weight(x) for x in model.spins], dtype=complex)
    if n == 0:
        return complex(const)

    total = N ** n
    radix = N ** np.arange(n, dtype=np.int64)

    def block_sum(start: int) -> complex:
        idx = np.arange(start, min(start + BLOCK, total), dtype=np.int64)
        cfg = (idx[:, None] // radix[None, :]) % N
        w = np.ones(len(idx), dtype=complex)
        for m, vec in single_terms:
            w *= vec[cfg[:, m]]
        for a, b, t in pair_terms:
            w *= t[cfg[:, a], cfg[:, b]]
        if not np.all(s_table == 1):
            for m in range(n):
                w *= s_table[cfg[:, m]]
        return complex(np.sum(w))

    starts = list(range(0, total, BLOCK))
    workers = min(threads or thread_count(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block_sum, starts))
    else:
        parts = [block_sum(s) for s in starts]
    return complex(const * np.sum(np.array(parts, dtype=complex)))


def _tail_exponent(model: SpinModel, e) -> float:
    """Power of 1/|x| by which one edge weight decays when one end runs off."""
    alpha = e.rho_a - e.rho_b
    if model.name != "fishingnet":
        raise ModelDomainError(f"no tail estimate for continuous model {model.name}")
    return (alpha if e.kind is EdgeKind.PLAIN else math.pi - alpha) / math.pi


def _continuous_z(g: SpinGraph, model: SpinModel, boundary) -> complex:
    interior = list(g.interior)
    if len(interior) > 2:
        raise PartitionError(f"continuous quadrature supports at most 2 interior spins, got {len(interior)}")
    nbrs = g.neighbours()
    for v in interior:
        decay = sum(_tail_exponent(model, e) for _, e in nbrs[v])
        if decay <= 1.0:
            raise PartitionError(f"integral over the spin at {list(v)} diverges (tail exponent {decay:.3f})")

    def weight(spin) -> float:
        w = 1.0
        for e in g.edges:
            w *= model.weight(e.kind, e.rho_a, e.rho_b, spin[e.x_first], spin[e.x_second]).real
        for v in interior:
            w *= model.s_weight(spin[v]).real
        return w

    spin = dict(boundary)

    def fixed_neighbours(v) -> List[float]:
        return [spin[u] for u, _ in nbrs[v] if u in spin]

    if not interior:
        return complex(weight(spin))
    if len(interior) == 1:
        (a,) = interior

        def f1(x):
            spin[a] = x
            return weight(spin)
        return complex(integrate_real_line(f1, fixed_neighbours(a), epsrel=1e-9))

    a, b = interior

    def outer(x):
        local = dict(spin)
        local[a] = x

        def inner(y):
            local[b] = y
            return weight(local)
        pts = [local[u] for u, _ in nbrs[b] if u in local and u != b]
        return integrate_real_line(inner, pts, epsrel=1e-9)
    # the inner integral is itself singular where x meets a neighbour of b
    return complex(integrate_real_line(outer, fixed_neighbours(a) + fixed_neighbours(b), epsrel=1e-8))


@dataclass(frozen=True)
class ZReport:
    z0: complex
    z: complex
    ledger_value: complex
    residual: float
    tolerance: float
    ledger: FactorLedger
    interior0: int
    interior: int

    @property
    def ok(self) -> bool:
        return self.residual < self.tolerance

    def to_dict(self) -> dict:
        def c(z):
            return {"re": z.real, "im": z.imag}
        return {"check": "zinv", "Z0": c(self.z0), "Z": c(self.z), "ledger_value": c(self.ledger_value),
                "residual": self.residual, "interior0": self.interior0, "interior": self.interior,
                "ledger": self.ledger.to_dict(), "tolerance": self.tolerance, "pass": self.ok}


def check_z_invariance(s0: Surface, script: Sequence[FlipRequest], model: SpinModel,
                       boundary: Optional[Mapping[Coord3, object]] = None, tolerance: float = ZINV_TOL,
                       max_interior: Optional[int] = None) -> ZReport:
    """Compare Z on the deformed surface with the evaluated ledger times Z on ``s0``.

    ``boundary`` defaults to every boundary spin set to the first spin value.
    """
    s, ledger = run_script(s0, script)
    g0, g = derive_spin_graph(s0), derive_spin_graph(s)
    if boundary is None:
        boundary = uniform_boundary(g0, model.spins[0] if model.is_discrete else 0.0)
    phi = evaluate_ledger(ledger, model)
    z0 = partition_function(g0, model, boundary, max_interior)
    z = partition_function(g, model, boundary, max_interior)
    residual = abs(z - phi * z0) / abs(z)
    return ZReport(z0, z, phi, float(residual), tolerance, ledger, len(g0.interior), len(g.interior))
