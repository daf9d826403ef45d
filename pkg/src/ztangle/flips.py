"""Cubic flips: local rewrites of a surface around one unit cube.

Every flip raises or lowers one cell of the surface by a unit step along
e_k.  With ``c`` the base corner of the cube, the faces of the cube are
the bottom ``ij(c)``, the top ``ij(c+e_k)`` and one wall on each of the
four sides.  A side wall takes one of two orientations depending on
whether the cell is below or above its neighbour on that side.  Which
sides already carry a wall when the cell is low (``high_sides``) fixes
the number of faces exchanged: none gives 1 <-> 5, one gives 2 <-> 4 and
two adjacent sides give 3 <-> 3.

Each template records the factor by which the partition function is
multiplied when applied FORWARD.  All sixteen are checked against
brute-force local sums by ``verify_template``.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import relations
from .models import ISING, ModelDomainError, SpinModel
from .surface import (
    UNIT,
    Coord3,
    Square,
    SquareType,
    Surface,
    add,
    boundary_vertices,
    derive_loops,
    edge_spec,
    is_black,
    loop_of_square,
    validate_surface,
)

IJ, IK, JK, KI, KJ = SquareType.IJ, SquareType.IK, SquareType.JK, SquareType.KI, SquareType.KJ
E_I, E_J, E_K = UNIT

SIDES = "NESW"


class FlipError(ValueError):
    pass


class PatternMismatch(FlipError):
    pass


class AdmissibilityError(FlipError):
    pass


class UnknownLoop(FlipError):
    pass


class FlipKind(str, enum.Enum):
    F15A = "F15A"
    F15B = "F15B"
    F15C = "F15C"
    F15D = "F15D"
    F24_1 = "F24_1"
    F24_2 = "F24_2"
    F24_3 = "F24_3"
    F24_4 = "F24_4"
    F24_5 = "F24_5"
    F24_6 = "F24_6"
    F24_7 = "F24_7"
    F24_8 = "F24_8"
    F33_1 = "F33_1"
    F33_2 = "F33_2"
    F33_3 = "F33_3"
    F33_4 = "F33_4"


class Direction(str, enum.Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


# -- factor tokens ------------------------------------------------------------

@dataclass(frozen=True)
class FactorToken:
    """One scalar factor.  ``kind`` is R, FPair, SumS, SInv or Delta."""

    kind: str
    args: Tuple[float, ...] = ()
    labels: Tuple[str, ...] = ()
    vertex: Optional[Coord3] = None
    exponent: int = 1

    def inverse(self) -> "FactorToken":
        return FactorToken(self.kind, self.args, self.labels, self.vertex, -self.exponent)

    def to_dict(self) -> dict:
        out = {"token": self.kind, "exponent": self.exponent}
        if self.args:
            out["args"] = list(self.args)
            out["labels"] = list(self.labels)
        if self.vertex is not None:
            out["vertex"] = list(self.vertex)
        return out

    def __str__(self) -> str:
        body = self.kind
        if self.labels:
            body += "(" + ",".join(self.labels) + ")"
        elif self.vertex is not None:
            body += str(list(self.vertex))
        return body if self.exponent == 1 else f"{body}^{self.exponent}"


# symbolic token templates: ("R", "prq") means R with arguments (p, r, q)
_TOKENS_15_PLAIN = (("R", "prq"), ("SumS", ""))
_TOKENS_15_BARRED = (("R", "rpq"), ("FPair", "qr"), ("SInv", ""), ("Delta", ""))


@dataclass(frozen=True)
class FlipTemplate:
    kind: FlipKind
    raise_cell: bool
    parity: int
    high_sides: FrozenSet[str]
    orientation: int
    tokens: Tuple[Tuple[str, str], ...]
    # offset of the SInv vertex from the cube base, if any
    sinv_offset: Optional[Coord3] = None

    @property
    def family(self) -> str:
        return self.kind.value[:3]


def _t(kind, raise_cell, parity, sides, orientation, tokens, sinv=None):
    return FlipTemplate(FlipKind(kind), raise_cell, parity, frozenset(sides), orientation, tokens, sinv)


TEMPLATES: Dict[FlipKind, FlipTemplate] = {t.kind: t for t in (
    _t("F15A", True, 0, "", 1, _TOKENS_15_PLAIN),
    _t("F15B", True, 1, "", 1, _TOKENS_15_BARRED, (0, 1, 0)),
    _t("F15C", False, 1, "NESW", -1, _TOKENS_15_PLAIN),
    _t("F15D", False, 0, "NESW", -1, _TOKENS_15_BARRED, (1, 0, 1)),
    _t("F24_1", True, 0, "N", 1, (("R", "prq"),)),
    _t("F24_2", True, 0, "W", 1, (("R", "prq"),)),
    _t("F24_3", True, 1, "N", 1, (("R", "rpq"),)),
    _t("F24_4", True, 1, "W", 1, (("R", "pqr"),)),
    _t("F24_5", False, 0, "NEW", -1, (("R", "rpq"),)),
    _t("F24_6", False, 0, "NSW", -1, (("R", "pqr"),)),
    _t("F24_7", False, 1, "NEW", -1, (("R", "prq"),)),
    _t("F24_8", False, 1, "NSW", -1, (("R", "prq"),)),
    _t("F33_1", True, 0, "NW", 1, (("R", "prq"),)),
    _t("F33_2", False, 1, "NW", 1, (("R", "prq"),)),
    _t("F33_3", True, 0, "NW", -1, (("R", "prq"),)),
    _t("F33_4", False, 1, "NW", -1, (("R", "prq"),)),
)}


def cube_states(base: Sequence[int], high_sides: Iterable[str]) -> Tuple[FrozenSet[Square], FrozenSet[Square]]:
    """Faces of the cube at ``base`` with the cell low, and with the cell high."""
    c = tuple(base)
    high = set(high_sides)
    low_walls = {"S": Square(KI, c), "N": Square(IK, add(c, E_J)),
                 "W": Square(JK, c), "E": Square(KJ, add(c, E_I))}
    high_walls = {"S": Square(IK, c), "N": Square(KI, add(c, E_J)),
                  "W": Square(KJ, c), "E": Square(JK, add(c, E_I))}
    low = {Square(IJ, c)} | {low_walls[s] for s in high}
    up = {Square(IJ, add(c, E_K))} | {high_walls[s] for s in SIDES if s not in high}
    return frozenset(low), frozenset(up)


def all_cube_faces(base: Sequence[int]) -> FrozenSet[Square]:
    low, up = cube_states(base, SIDES)
    low2, up2 = cube_states(base, "")
    return low | up | low2 | up2


def flip_states(kind: FlipKind, base: Sequence[int], direction: Direction = Direction.FORWARD):
    """(start, end) face sets of a flip at ``base``."""
    tpl = TEMPLATES[FlipKind(kind)]
    low, up = cube_states(base, tpl.high_sides)
    start, end = (low, up) if tpl.raise_cell else (up, low)
    if Direction(direction) is Direction.INVERSE:
        start, end = end, start
    return start, end


# -- requests and ledger ------------------------------------------------------

@dataclass(frozen=True)
class LoopRef:
    """Reuse the rapidity of an existing r loop."""
    id: int


@dataclass(frozen=True)
class FlipRequest:
    kind: FlipKind
    anchor: Coord3
    direction: Direction = Direction.FORWARD
    r_value: Union[None, float, LoopRef] = None

    def to_dict(self) -> dict:
        out = {"flip": self.kind.value, "anchor": list(self.anchor)}
        if self.direction is Direction.INVERSE:
            out["direction"] = "inverse"
        if isinstance(self.r_value, LoopRef):
            out["r_loop"] = self.r_value.id
        elif self.r_value is not None:
            out["r_value"] = self.r_value
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "FlipRequest":
        r = LoopRef(int(d["r_loop"])) if "r_loop" in d else d.get("r_value")
        anchor = tuple(int(v) for v in d["anchor"])
        if len(anchor) != 3:
            raise ValueError("anchor needs three coordinates")
        if r is not None and not isinstance(r, LoopRef):
            r = float(r)
        return cls(FlipKind(d["flip"]), anchor, Direction(d.get("direction", "forward")), r)


def parse_script(data) -> List[FlipRequest]:
    if isinstance(data, str):
        data = json.loads(data)
    return [FlipRequest.from_dict(step) for step in data]


@dataclass(frozen=True)
class LedgerEntry:
    kind: FlipKind
    direction: Direction
    anchor: Coord3
    tokens: Tuple[FactorToken, ...]

    def to_dict(self) -> dict:
        return {"flip": self.kind.value, "direction": self.direction.value, "anchor": list(self.anchor),
                "tokens": [t.to_dict() for t in self.tokens]}


@dataclass(frozen=True)
class FactorLedger:
    entries: Tuple[LedgerEntry, ...] = ()

    def tokens(self) -> List[FactorToken]:
        return [t for e in self.entries for t in e.tokens]

    def to_dict(self) -> dict:
        return {"schema": "ztangle/1", "entries": [e.to_dict() for e in self.entries]}


# -- applying flips -----------------------------------------------------------

def _boundary_edges(squares: Iterable[Square]) -> FrozenSet[FrozenSet[Coord3]]:
    count: Dict[FrozenSet[Coord3], int] = {}
    for sq in squares:
        for u, v in sq.directed_edges():
            key = frozenset((u, v))
            count[key] = count.get(key, 0) + 1
    return frozenset(k for k, n in count.items() if n < 2)


def _resolve_tokens(tpl: FlipTemplate, s: Surface, base: Coord3, r: float, r_label: str,
                    exponent: int) -> Tuple[FactorToken, ...]:
    p_idx, q_idx = base[1], base[0]
    if p_idx not in s.p_values or q_idx not in s.q_values:
        raise FlipError(f"no p/q rapidity for the lines through the cube at {list(base)}")
    values = {"p": s.p_values[p_idx], "q": s.q_values[q_idx], "r": r}
    labels = {"p": f"p{p_idx}", "q": f"q{q_idx}", "r": r_label}
    out = []
    for kind, args in tpl.tokens:
        vertex = add(base, tpl.sinv_offset) if kind == "SInv" else None
        out.append(FactorToken(kind, tuple(values[a] for a in args), tuple(labels[a] for a in args),
                               vertex, exponent))
    return tuple(out)


def _remap_loops(old: Surface, new_squares: Sequence[Square], new_r: Optional[float]):
    """r values for the loops of the rewritten surface, keyed by their new IDs."""
    old_owner = {sq: loop.id for sq, loop in loop_of_square(derive_loops(old)).items()}
    probe = old.replace(new_squares, {})
    loops = derive_loops(probe)
    values: Dict[int, float] = {}
    used: Dict[int, int] = {}
    created = []
    for loop in loops:
        parents = {old_owner[sq] for sq in loop.squares if sq in old_owner}
        if len(parents) > 1:
            raise AdmissibilityError(f"flip would merge r loops {sorted(parents)}")
        if parents:
            (pid,) = parents
            if pid in used:
                raise AdmissibilityError(f"flip would split r loop {pid}")
            used[pid] = loop.id
            values[loop.id] = old.r_values[pid]
        else:
            created.append(loop)
    return values, created, loops


def apply_flip(s: Surface, kind: FlipKind, anchor: Sequence[int],
               r_value: Union[None, float, LoopRef] = None,
               direction: Direction = Direction.FORWARD) -> Tuple[Surface, List[FactorToken]]:
    """Rewrite ``s`` by one flip and return the new surface with its factors."""
    kind, direction = FlipKind(kind), Direction(direction)
    tpl = TEMPLATES[kind]
    base = tuple(int(v) for v in anchor)
    if sum(base) % 2 != tpl.parity:
        raise PatternMismatch(f"{kind.value} needs an anchor of parity {tpl.parity}, got {list(base)}")
    start, end = flip_states(kind, base, direction)
    present = s.square_set
    local = present & all_cube_faces(base)
    if local != start:
        raise PatternMismatch(f"pattern mismatch for {kind.value} at {list(base)}: found "
                              f"{sorted(map(str, local))}, need {sorted(map(str, start))}")

    report = validate_surface(s)
    if not report.ok:
        raise FlipError(f"input surface is invalid: {report.violations[0].message}")
    owner = loop_of_square(report.r_loops)
    # loop the flip acts on: the walls of whichever state has them
    walls = [sq for sq in start if sq.type.is_wall]
    creates = not walls
    if walls:
        loops = {owner[w].id for w in walls}
        if len(loops) != 1:
            raise PatternMismatch(f"walls at {list(base)} belong to different r loops")
        loop = report.r_loops[loops.pop()]
        if loop.orientation != tpl.orientation:
            raise PatternMismatch(f"{kind.value} needs a {'positive' if tpl.orientation > 0 else 'negative'} "
                                  f"r loop, loop {loop.id} is {'positive' if loop.orientation > 0 else 'negative'}")
        if tpl.family == "F15" and set(loop.squares) != set(walls):
            raise PatternMismatch("loop to remove has more than the four cube walls")
        r, r_label = loop.value, f"r{loop.id}"
        if isinstance(r_value, (int, float)) and abs(float(r_value) - r) > 1e-15:
            raise FlipError(f"r_value {r_value} conflicts with loop {loop.id} rapidity {r}")
    else:
        if r_value is None:
            raise FlipError(f"{kind.value} creates an r loop and needs r_value")
        if isinstance(r_value, LoopRef):
            if r_value.id not in s.r_values:
                raise UnknownLoop(f"unknown r loop {r_value.id}")
            r, r_label = s.r_values[r_value.id], f"r{r_value.id}"
        else:
            r, r_label = float(r_value), "r"

    squares = (present - start) | end
    values, created, new_loops = _remap_loops(s, tuple(squares), r)
    if creates:
        if len(created) != 1:
            raise AdmissibilityError("flip did not create exactly one r loop")
        values[created[0].id] = r
        if r_label == "r":
            r_label = f"r{created[0].id}"
        if created[0].orientation != tpl.orientation:
            raise AdmissibilityError("created r loop has the wrong orientation")
    elif created:
        raise AdmissibilityError("flip created an r loop unexpectedly")
    new = s.replace(squares, values)

    if _boundary_edges(new.squares) != _boundary_edges(s.squares):
        raise AdmissibilityError(f"{kind.value} at {list(base)} would alter the boundary")
    check = validate_surface(new)
    if not check.ok:
        names = sorted({v.invariant for v in check.violations})
        raise AdmissibilityError(f"{kind.value} at {list(base)} breaks {', '.join(names)}: "
                                 f"{check.violations[0].message}")
    exponent = 1 if direction is Direction.FORWARD else -1
    return new, list(_resolve_tokens(tpl, s, base, r, r_label, exponent))


class ScriptError(FlipError):
    def __init__(self, step: int, reason: str):
        super().__init__(f"step {step}: {reason}")
        self.step = step
        self.reason = reason


def run_script(s: Surface, script: Sequence[FlipRequest]) -> Tuple[Surface, FactorLedger]:
    """Apply flips strictly in order; the first failure aborts with its step index."""
    entries = []
    for m, req in enumerate(script):
        if isinstance(req, Mapping):
            req = FlipRequest.from_dict(req)
        try:
            s, tokens = apply_flip(s, req.kind, req.anchor, req.r_value, req.direction)
        except FlipError as exc:
            raise ScriptError(m, str(exc)) from exc
        entries.append(LedgerEntry(req.kind, req.direction, tuple(req.anchor), tuple(tokens)))
    return s, FactorLedger(tuple(entries))


def applicable_flips(s: Surface, r_value: float = 0.0) -> List[FlipRequest]:
    """Every single flip (either direction) that applies to ``s``."""
    out = []
    bases = set()
    for sq in s.squares:
        if sq.type is IJ:
            bases.add(sq.n)
            bases.add(add(sq.n, (0, 0, -1)))
    for base in sorted(bases):
        for kind, tpl in TEMPLATES.items():
            if sum(base) % 2 != tpl.parity:
                continue
            for direction in Direction:
                creates = tpl.family == "F15" and direction is Direction.FORWARD
                req = FlipRequest(kind, base, direction, r_value if creates else None)
                try:
                    apply_flip(s, kind, base, req.r_value, direction)
                except FlipError:
                    continue
                out.append(req)
    return out


# -- ledger evaluation --------------------------------------------------------

class DivergentFactor(ModelDomainError):
    pass


@lru_cache(maxsize=4096)
def _R(model: SpinModel, a: float, b: float, c: float) -> complex:
    return relations.extract_R(model, a, b, c)


@lru_cache(maxsize=4096)
def _fpair(model: SpinModel, a: float, b: float) -> complex:
    return relations.extract_fpair(model, a, b)


def token_value(token: FactorToken, model: SpinModel) -> complex:
    if token.kind == "R":
        val = _R(model, *token.args)
    elif token.kind == "FPair":
        if not model.is_discrete:
            raise DivergentFactor("inversion constant of a continuous model is a delta function")
        val = _fpair(model, *token.args)
    elif token.kind == "SumS":
        if not model.is_discrete:
            raise DivergentFactor(f"sum of S over real spins diverges for {model.name}")
        val = model.spin_sum()
    elif token.kind == "SInv":
        # S is identically 1 for the shipped models, so the spin at the vertex is irrelevant
        val = 1.0 / model.s_weight(None)
    elif token.kind == "Delta":
        if not model.is_discrete:
            raise DivergentFactor("delta at coincident arguments diverges for continuous spins")
        val = 1.0
    else:
        raise ValueError(f"unknown factor token {token.kind!r}")
    return complex(val) ** token.exponent


def evaluate_tokens(tokens: Iterable[FactorToken], model: SpinModel) -> complex:
    out = 1.0 + 0j
    for t in tokens:
        out *= token_value(t, model)
    return out


def evaluate_ledger(ledger: Union[FactorLedger, Sequence[FactorToken]], model: SpinModel) -> complex:
    tokens = ledger.tokens() if isinstance(ledger, FactorLedger) else list(ledger)
    return evaluate_tokens(tokens, model)


# -- standalone verification of the catalogue ---------------------------------

@dataclass(frozen=True)
class TemplateCheck:
    kind: FlipKind
    ratio: complex
    expected: complex
    spread: float
    residual: float
    configs: int

    @property
    def ok(self) -> bool:
        return self.residual < 1e-12 and self.spread < 1e-12


def _local_z(model: SpinModel, squares, rapidities, fixed: Mapping[Coord3, int]) -> complex:
    specs = [edge_spec(sq, rapidities) for sq in squares]
    verts = sorted({v for e in specs for v in (e.x_first, e.x_second)} - set(fixed))
    total = 0j
    for cfg in itertools.product(model.spins, repeat=len(verts)):
        spin = dict(fixed)
        spin.update(zip(verts, cfg))
        w = 1.0 + 0j
        for e in specs:
            w *= model.weight(e.kind, e.rho_a, e.rho_b, spin[e.x_first], spin[e.x_second])
        for v in verts:
            w *= model.s_weight(spin[v])
        total += w
    return total


def verify_template(kind: FlipKind, model: SpinModel = ISING,
                    rapidities: Tuple[float, float, float] = (0.9, 0.5, 0.2)) -> TemplateCheck:
    """Brute-force ratio of local sums after/before one FORWARD flip.

    The cube is taken on its own: black corners common to both states
    are fixed, the rest are summed.  The ratio must be the same for every
    fixed configuration and equal the template's evaluated tokens.
    """
    tpl = TEMPLATES[FlipKind(kind)]
    base = (tpl.parity, 0, 0)
    start, end = flip_states(kind, base)
    rap = dict(zip("pqr", rapidities))

    def black(faces):
        return {v for sq in faces for v in sq.corners if is_black(v)}

    shared = sorted(black(start) & black(end))
    ratios = []
    for cfg in itertools.product(model.spins, repeat=len(shared)):
        fixed = dict(zip(shared, cfg))
        ratios.append(_local_z(model, end, rap, fixed) / _local_z(model, start, rap, fixed))
    ratios = np.array(ratios)
    surface = Surface((Square(IJ, base),), {0: rap["p"]}, {base[0]: rap["q"]}, {})
    tokens = _resolve_tokens(tpl, surface, base, rap["r"], "r", 1)
    expected = evaluate_tokens(tokens, model)
    spread = float(np.max(np.abs(ratios - ratios[0])) / abs(ratios[0]))
    residual = float(abs(ratios[0] - expected) / abs(expected))
    return TemplateCheck(FlipKind(kind), complex(ratios[0]), expected, spread, residual, len(ratios))
