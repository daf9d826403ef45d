"""Surfaces of oriented elementary squares in Z^3 and their spin graphs.

A surface is a finite set of unit squares.  Each square has one of five
types (ij, ik, jk, ki, kj) and an anchor coordinate; its corners are
``(n, n+e_a, n+e_a+e_b, n+e_b)`` for the two axes ``a, b`` named by the
type, and that cyclic order fixes its orientation.

Vertices with even coordinate sum are black.  Every square carries one
edge of the spin graph joining its two black corners, and the kind of
that edge (plain or barred weight) together with the order of its two
rapidities and two spins is read from ``WEIGHT_TABLE``.
"""

from __future__ import annotations

import enum
import json
from functools import lru_cache
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

Coord3 = Tuple[int, int, int]

AXES = {"i": 0, "j": 1, "k": 2}
UNIT = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


class SquareType(str, enum.Enum):
    IJ = "ij"
    IK = "ik"
    JK = "jk"
    KI = "ki"
    KJ = "kj"

    @property
    def axes(self) -> Tuple[int, int]:
        return AXES[self.value[0]], AXES[self.value[1]]

    @property
    def is_wall(self) -> bool:
        return self is not SquareType.IJ


class EdgeKind(str, enum.Enum):
    PLAIN = "plain"
    BARRED = "barred"


def add(u: Sequence[int], v: Sequence[int]) -> Coord3:
    return (u[0] + v[0], u[1] + v[1], u[2] + v[2])


def sub(u: Sequence[int], v: Sequence[int]) -> Coord3:
    return (u[0] - v[0], u[1] - v[1], u[2] - v[2])


def is_black(v: Sequence[int]) -> bool:
    return (v[0] + v[1] + v[2]) % 2 == 0


class Square(NamedTuple):
    type: SquareType
    n: Coord3

    @property
    def corners(self) -> Tuple[Coord3, Coord3, Coord3, Coord3]:
        a, b = self.type.axes
        c1 = add(self.n, UNIT[a])
        return (self.n, c1, add(c1, UNIT[b]), add(self.n, UNIT[b]))

    def directed_edges(self) -> List[Tuple[Coord3, Coord3]]:
        c = self.corners
        return [(c[m], c[(m + 1) % 4]) for m in range(4)]

    def sort_key(self):
        return (self.n, self.type.value)

    def __str__(self) -> str:
        return f"{self.type.value}{list(self.n)}"


def square(type_: str, n: Sequence[int]) -> Square:
    return Square(SquareType(type_), (int(n[0]), int(n[1]), int(n[2])))


# Per-square weight table.  For each type: the rapidity-line families
# (first, second) crossing the square, and for each of the two diagonals
# (corner indices 0-2 or 1-3) the edge kind and which corners play the
# first and second spin argument.  The p line is indexed by n_j, the q
# line by n_i and the r line by the loop the square belongs to.
WEIGHT_TABLE: Dict[SquareType, Tuple[Tuple[str, str], Dict[int, Tuple[EdgeKind, int, int]]]] = {
    SquareType.IJ: (("p", "q"), {0: (EdgeKind.BARRED, 0, 2), 1: (EdgeKind.PLAIN, 3, 1)}),
    SquareType.IK: (("r", "q"), {0: (EdgeKind.BARRED, 0, 2), 1: (EdgeKind.PLAIN, 3, 1)}),
    SquareType.JK: (("p", "r"), {0: (EdgeKind.PLAIN, 2, 0), 1: (EdgeKind.BARRED, 3, 1)}),
    SquareType.KI: (("q", "r"), {0: (EdgeKind.BARRED, 2, 0), 1: (EdgeKind.PLAIN, 1, 3)}),
    SquareType.KJ: (("r", "p"), {0: (EdgeKind.PLAIN, 2, 0), 1: (EdgeKind.BARRED, 3, 1)}),
}

# Direction of travel of the r line across each wall type, in the (i, j) plane.
R_DIRECTION = {
    SquareType.IK: (1, 0),
    SquareType.JK: (0, 1),
    SquareType.KI: (-1, 0),
    SquareType.KJ: (0, -1),
}


def line_families(sq: Square) -> Tuple[str, str]:
    return WEIGHT_TABLE[sq.type][0]


def line_index(sq: Square, family: str) -> int:
    """Index of the p or q line crossing ``sq`` (p: n_j, q: n_i)."""
    if family == "p":
        return sq.n[1]
    if family == "q":
        return sq.n[0]
    raise ValueError("r lines are indexed by loop, not by coordinate")


def black_diagonal(sq: Square) -> Tuple[EdgeKind, Coord3, Coord3]:
    """Edge kind and ordered black endpoints (x_first, x_second) of ``sq``."""
    diag = 0 if is_black(sq.n) else 1
    kind, first, second = WEIGHT_TABLE[sq.type][1][diag]
    c = sq.corners
    return kind, c[first], c[second]


@dataclass(frozen=True)
class EdgeSpec:
    kind: EdgeKind
    rho_a: float
    rho_b: float
    x_first: Coord3
    x_second: Coord3
    lines: Tuple[str, str] = ("", "")
    square: Optional[Square] = None


@dataclass(frozen=True)
class RapidityLine:
    family: str
    id: int
    value: float
    orientation: int
    squares: Tuple[Square, ...]
    depth: int = 0
    n_k: Optional[int] = None

    @property
    def label(self) -> str:
        if self.family != "r":
            return f"{self.family}{self.id}"
        return f"r{self.depth}{'+' if self.orientation > 0 else '-'}"


@dataclass(frozen=True)
class SpinGraph:
    black_vertices: frozenset
    edges: Tuple[EdgeSpec, ...]
    interior: Tuple[Coord3, ...]
    boundary: Tuple[Coord3, ...]

    def neighbours(self) -> Dict[Coord3, List[Tuple[Coord3, EdgeSpec]]]:
        out: Dict[Coord3, List[Tuple[Coord3, EdgeSpec]]] = defaultdict(list)
        for e in self.edges:
            out[e.x_first].append((e.x_second, e))
            out[e.x_second].append((e.x_first, e))
        return out


@dataclass(frozen=True)
class Violation:
    invariant: str
    message: str
    squares: Tuple[Square, ...] = ()
    anchor: Optional[Coord3] = None


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: Tuple[Violation, ...]
    r_loops: Tuple[RapidityLine, ...]

    def labels(self) -> List[str]:
        return sorted(loop.label for loop in self.r_loops)


class SurfaceError(ValueError):
    pass


@dataclass(frozen=True)
class Surface:
    squares: Tuple[Square, ...]
    p_values: Mapping[int, float] = field(default_factory=dict)
    q_values: Mapping[int, float] = field(default_factory=dict)
    r_values: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        sq = tuple(sorted((Square(SquareType(s[0]), tuple(s[1])) for s in self.squares),
                          key=Square.sort_key))
        object.__setattr__(self, "squares", sq)
        for name in ("p_values", "q_values", "r_values"):
            vals = {int(k): float(v) for k, v in getattr(self, name).items()}
            object.__setattr__(self, name, dict(sorted(vals.items())))

    def __hash__(self):
        return hash((self.squares, tuple(self.p_values.items()), tuple(self.q_values.items()),
                     tuple(self.r_values.items())))

    @property
    def square_set(self) -> frozenset:
        return frozenset(self.squares)

    def vertices(self) -> set:
        return {v for s in self.squares for v in s.corners}

    def replace(self, squares: Iterable[Square], r_values: Optional[Mapping[int, float]] = None) -> "Surface":
        return Surface(tuple(squares), self.p_values, self.q_values,
                       self.r_values if r_values is None else r_values)

    def to_dict(self) -> dict:
        return {
            "schema": "ztangle/1",
            "squares": [{"type": s.type.value, "n": list(s.n)} for s in self.squares],
            "p_values": {str(k): v for k, v in self.p_values.items()},
            "q_values": {str(k): v for k, v in self.q_values.items()},
            "r_values": {str(k): v for k, v in self.r_values.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Surface":
        try:
            squares = tuple(square(s["type"], s["n"]) for s in data["squares"])
            return cls(squares, data.get("p_values", {}), data.get("q_values", {}),
                       data.get("r_values", {}))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SurfaceError(f"malformed surface document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "Surface":
        return cls.from_dict(json.loads(text))


def build_flat_surface(width: int, height: int, p_values: Sequence[float],
                       q_values: Sequence[float]) -> Surface:
    """Planar width x height patch of ij squares at n_k = 0.

    ``p_values[b]`` is the rapidity of the p line through row ``b`` and
    ``q_values[a]`` that of the q line through column ``a``.
    """
    if width <= 0 or height <= 0:
        raise SurfaceError("width and height must be positive")
    if len(p_values) != height or len(q_values) != width:
        raise SurfaceError(f"need {height} p values and {width} q values, "
                           f"got {len(p_values)} and {len(q_values)}")
    squares = tuple(Square(SquareType.IJ, (a, b, 0)) for a in range(width) for b in range(height))
    s = Surface(squares, dict(enumerate(p_values)), dict(enumerate(q_values)), {})
    report = validate_surface(s)
    if not report.ok:
        raise SurfaceError(report.violations[0].message)
    return s


# -- validation ---------------------------------------------------------------

def _edge_incidence(squares: Sequence[Square]) -> Dict[frozenset, List[Tuple[Coord3, Coord3, Square]]]:
    inc: Dict[frozenset, list] = defaultdict(list)
    for s in squares:
        for u, v in s.directed_edges():
            inc[frozenset((u, v))].append((u, v, s))
    return inc


def boundary_vertices(squares: Sequence[Square]) -> set:
    """Vertices incident to an edge shared by fewer than two squares."""
    out = set()
    for key, occ in _edge_incidence(squares).items():
        if len(occ) < 2:
            out.update(key)
    return out


def _vertical_edges(sq: Square) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    """(i, j) positions of the entry and exit e_k-edges of a wall, along its r line."""
    c = sq.corners
    verts = sorted({(v[0], v[1]) for v in c})
    d = R_DIRECTION[sq.type]
    a, b = verts
    if (b[0] - a[0], b[1] - a[1]) == d:
        return a, b
    return b, a


def _polygon_area(points: Sequence[Tuple[int, int]]) -> float:
    area = 0.0
    for m in range(len(points)):
        x0, y0 = points[m]
        x1, y1 = points[(m + 1) % len(points)]
        area += x0 * y1 - x1 * y0
    return area / 2.0


def _inside(point: Tuple[float, float], poly: Sequence[Tuple[int, int]]) -> bool:
    x, y = point
    hit = False
    for m in range(len(poly)):
        x0, y0 = poly[m]
        x1, y1 = poly[(m + 1) % len(poly)]
        if (y0 > y) != (y1 > y) and x < x0 + (y - y0) * (x1 - x0) / (y1 - y0):
            hit = not hit
    return hit


def _enclosed_cells(poly: Sequence[Tuple[int, int]]) -> frozenset:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return frozenset((a, b) for a in range(min(xs), max(xs)) for b in range(min(ys), max(ys))
                     if _inside((a + 0.5, b + 0.5), poly))


@dataclass
class _Loop:
    squares: List[Square]
    n_k: int
    polygon: List[Tuple[int, int]]
    orientation: int
    cells: frozenset

    @property
    def key(self):
        return (self.n_k, min(min(s.corners) for s in self.squares))


def _trace_loops(walls: Sequence[Square], violations: List[Violation]) -> Tuple[List[_Loop], set]:
    """Follow r lines through walls; also returns the branching vertical edges.

    A vertical edge where two r lines meet is resolved by turning left,
    which keeps the higher side of every wall on the same loop.
    """
    by_level: Dict[int, List[Square]] = defaultdict(list)
    for w in walls:
        by_level[w.n[2]].append(w)
    loops: List[_Loop] = []
    branching = set()
    for n_k, members in by_level.items():
        entry: Dict[Tuple[int, int], List[Square]] = defaultdict(list)
        for w in members:
            entry[_vertical_edges(w)[0]].append(w)
        branching.update((pos[0], pos[1], n_k) for pos, ws in entry.items() if len(ws) > 1)
        seen = set()
        for start in sorted(members, key=Square.sort_key):
            if start in seen:
                continue
            path, cur = [], start
            while cur not in seen:
                seen.add(cur)
                path.append(cur)
                nxt = entry.get(_vertical_edges(cur)[1], [])
                if len(nxt) > 1:
                    dx, dy = R_DIRECTION[cur.type]
                    nxt = [w for w in nxt if R_DIRECTION[w.type] == (-dy, dx)]
                if len(nxt) != 1:
                    violations.append(Violation("r-line", f"r line broken after {cur}", (cur,)))
                    break
                cur = nxt[0]
            else:
                if cur is not start:
                    violations.append(Violation("r-line", f"r line through {start} does not close",
                                                tuple(path)))
                    continue
                poly = [_vertical_edges(w)[0] for w in path]
                area = _polygon_area(poly)
                loops.append(_Loop(path, n_k, poly, 1 if area > 0 else -1, _enclosed_cells(poly)))
    return loops, branching


def _loop_depths(loops: Sequence[_Loop]) -> List[int]:
    def inside(a: _Loop, b: _Loop) -> bool:
        if a is b or not a.cells <= b.cells:
            return False
        if a.cells != b.cells:
            return True
        return abs(a.n_k + 0.5) > abs(b.n_k + 0.5)
    return [sum(inside(a, b) for b in loops) for a in loops]


def derive_loops(s: Surface, violations: Optional[List[Violation]] = None) -> Tuple[RapidityLine, ...]:
    """r loops of ``s`` sorted by (n_k, minimum corner), with orientation and depth."""
    if violations is None:
        return _cached_loops(s)
    return _derive_loops(s, violations)


@lru_cache(maxsize=1024)
def _cached_loops(s: Surface) -> Tuple[RapidityLine, ...]:
    return _derive_loops(s, [])


def _derive_loops(s: Surface, violations: List[Violation]) -> Tuple[RapidityLine, ...]:
    walls = [sq for sq in s.squares if sq.type.is_wall]
    loops = sorted(_trace_loops(walls, violations)[0], key=lambda lp: lp.key)
    depths = _loop_depths(loops)
    return tuple(RapidityLine("r", m, s.r_values.get(m, float("nan")), lp.orientation,
                              tuple(lp.squares), depth, lp.n_k)
                 for m, (lp, depth) in enumerate(zip(loops, depths)))


def _check_pairs(squares: Sequence[Square], violations: List[Violation]) -> None:
    # along a line of fixed (n_i, n_k), ik and ki walls must alternate in n_j;
    # likewise jk and kj along fixed (n_j, n_k)
    for up, down, axis in ((SquareType.IK, SquareType.KI, 1), (SquareType.JK, SquareType.KJ, 0)):
        lines: Dict[tuple, List[Square]] = defaultdict(list)
        for sq in squares:
            if sq.type in (up, down):
                key = tuple(sq.n[m] for m in range(3) if m != axis)
                lines[key].append(sq)
        for key, members in lines.items():
            members.sort(key=lambda sq: sq.n[axis])
            kinds = [sq.type for sq in members]
            ok = len(kinds) % 2 == 0 and all(kinds[m] != kinds[m + 1] for m in range(0, len(kinds) - 1, 2))
            if not ok:
                violations.append(Violation("pairing", f"unpaired {up.value}/{down.value} walls",
                                            tuple(members)))


def _check_condition(s: Surface, loops: Sequence[RapidityLine], violations: List[Violation]) -> None:
    # both forbidden pairs are consecutive along an r line; where two r lines
    # touch at a vertical edge the tracer turns left, so a pair meeting at
    # such an edge is forbidden as soon as either square has the bad sign
    orient = {}
    for loop in loops:
        for sq in loop.squares:
            orient[sq] = loop.orientation
    branching = _trace_loops([sq for sq in s.squares if sq.type.is_wall], [])[1]
    present = s.square_set

    def bad(a: Square, b: Square, sign: int, joint: Coord3) -> bool:
        signs = (orient.get(a), orient.get(b))
        if joint in branching:
            return sign in signs
        return signs == (sign, sign)

    for sq in s.squares:
        if sq.type is not SquareType.KI:
            continue
        n = sq.n
        partner = Square(SquareType.KJ, add(n, UNIT[0]))
        if partner in present and bad(sq, partner, 1, add(n, UNIT[0])):
            violations.append(Violation("condition", f"ki{list(n)} with kj at n+e_i on a positive r loop",
                                        (sq, partner), n))
        base = sub(n, UNIT[1])
        partner = Square(SquareType.KJ, base)
        if partner in present and bad(sq, partner, -1, n):
            violations.append(Violation("condition", f"ki at n+e_j with kj{list(base)} on a negative r loop",
                                        (sq, partner), base))


def validate_surface(s: Surface) -> ValidationReport:
    """Check every structural invariant of ``s``; never raises."""
    return _validate(s)


@lru_cache(maxsize=1024)
def _validate(s: Surface) -> ValidationReport:
    violations: List[Violation] = []
    squares = list(s.squares)
    if not squares:
        violations.append(Violation("empty", "surface has no squares"))
        return ValidationReport(False, tuple(violations), ())
    if len(set(squares)) != len(squares):
        dup = tuple(sq for sq in set(squares) if squares.count(sq) > 1)
        violations.append(Violation("duplicate", "coinciding squares", dup))

    inc = _edge_incidence(squares)
    for key, occ in inc.items():
        if len(occ) > 2:
            violations.append(Violation("manifold", f"edge {sorted(key)} shared by {len(occ)} squares",
                                        tuple(o[2] for o in occ)))
        elif len(occ) == 2 and occ[0][0] == occ[1][0]:
            violations.append(Violation("orientability", f"edge {sorted(key)} traversed twice in one direction",
                                        (occ[0][2], occ[1][2])))

    n_vertices = len(s.vertices())
    euler = n_vertices - len(inc) + len(squares)
    if euler != 1:
        violations.append(Violation("euler", f"Euler characteristic {euler}, expected 1"))
    # connectivity through shared edges
    adj: Dict[Square, set] = defaultdict(set)
    for occ in inc.values():
        for _, _, a in occ:
            for _, _, b in occ:
                if a != b:
                    adj[a].add(b)
    seen, stack = {squares[0]}, [squares[0]]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if len(seen) != len(set(squares)):
        violations.append(Violation("connected", "square complex is disconnected"))

    _check_pairs(squares, violations)
    loops = derive_loops(s, violations)
    _check_condition(s, loops, violations)

    for sq in squares:
        for fam in line_families(sq):
            if fam == "p" and sq.n[1] not in s.p_values:
                violations.append(Violation("rapidity", f"no p value for row {sq.n[1]}", (sq,)))
            elif fam == "q" and sq.n[0] not in s.q_values:
                violations.append(Violation("rapidity", f"no q value for column {sq.n[0]}", (sq,)))
    for loop in loops:
        if loop.id not in s.r_values:
            violations.append(Violation("rapidity", f"no r value for loop {loop.id}", loop.squares[:1]))
    # collapse repeated messages from the per-square rapidity scan
    unique = tuple(dict.fromkeys(violations))
    return ValidationReport(not unique, unique, loops)


# -- spin graph ---------------------------------------------------------------

def loop_of_square(loops: Iterable[RapidityLine]) -> Dict[Square, RapidityLine]:
    return {sq: loop for loop in loops for sq in loop.squares}


def edge_spec(sq: Square, values: Mapping[str, float], labels: Optional[Mapping[str, str]] = None) -> EdgeSpec:
    """EdgeSpec of one square given the rapidities of the lines crossing it."""
    fam_a, fam_b = line_families(sq)
    kind, u, v = black_diagonal(sq)
    labels = labels or {}
    return EdgeSpec(kind, values[fam_a], values[fam_b], u, v,
                    (labels.get(fam_a, fam_a), labels.get(fam_b, fam_b)), sq)


def derive_spin_graph(s: Surface) -> SpinGraph:
    report = validate_surface(s)
    if not report.ok:
        raise SurfaceError(f"invalid surface: {report.violations[0].message}")
    owner = loop_of_square(report.r_loops)
    edges = []
    for sq in s.squares:
        values, labels = {}, {}
        for fam in line_families(sq):
            if fam == "r":
                loop = owner[sq]
                values[fam], labels[fam] = s.r_values[loop.id], f"r{loop.id}"
            else:
                idx = line_index(sq, fam)
                values[fam] = (s.p_values if fam == "p" else s.q_values)[idx]
                labels[fam] = f"{fam}{idx}"
        edges.append(edge_spec(sq, values, labels))
    black = frozenset(v for v in s.vertices() if is_black(v))
    bnd = boundary_vertices(s.squares)
    interior = tuple(sorted(v for v in black if v not in bnd))
    boundary = tuple(sorted(v for v in black if v in bnd))
    return SpinGraph(black, tuple(edges), interior, boundary)


def graph_from_edges(edges: Sequence[EdgeSpec], interior: Iterable[Coord3]) -> SpinGraph:
    """Spin graph assembled directly from edges; vertices not listed as interior are boundary."""
    verts = {e.x_first for e in edges} | {e.x_second for e in edges}
    interior = tuple(sorted(set(interior)))
    return SpinGraph(frozenset(verts), tuple(edges), interior,
                     tuple(sorted(verts - set(interior))))
