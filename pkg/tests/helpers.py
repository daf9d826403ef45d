"""Independent constructors and oracles shared by the test modules."""

import itertools
import random

from ztangle.flips import FlipError, FlipKind, Direction, FlipRequest, TEMPLATES, apply_flip
from ztangle.surface import Square, SquareType, Surface, is_black

IJ, IK, JK, KI, KJ = (SquareType(t) for t in ("ij", "ik", "jk", "ki", "kj"))


def stepped_surface(heights, width, height, p_values, q_values, r_values=None):
    """Surface of a height function on cells, built wall by wall.

    ``heights`` maps (i, j) to an integer level (missing cells are 0).
    Walls between neighbouring cells get the type that puts the higher
    cell on the left of the r direction.  Outside the patch the level is
    0, so a raised edge cell carries a wall on the patch edge too.
    """
    h = {(a, b): heights.get((a, b), 0) for a in range(width) for b in range(height)}

    def level(a, b):
        # the world outside the patch stays at level 0
        return h.get((a, b), 0)

    squares = [Square(IJ, (a, b, k)) for (a, b), k in h.items()]
    for a in range(-1, width):
        for b in range(-1, height):
            k = level(a, b)
            if 0 <= b < height:
                k2 = level(a + 1, b)
                for n_k in range(min(k, k2), max(k, k2)):
                    squares.append(Square(JK if k > k2 else KJ, (a + 1, b, n_k)))
            if 0 <= a < width:
                k2 = level(a, b + 1)
                for n_k in range(min(k, k2), max(k, k2)):
                    squares.append(Square(KI if k > k2 else IK, (a, b + 1, n_k)))
    return Surface(tuple(squares), dict(enumerate(p_values)), dict(enumerate(q_values)), r_values or {})


def heights_of(s: Surface):
    return {(sq.n[0], sq.n[1]): sq.n[2] for sq in s.squares if sq.type is IJ}


def random_walk(s, rng: random.Random, steps: int, r_values=(0.55, 0.65, 0.75, 0.5, 0.8, 0.6, 0.7, 0.45)):
    """Apply ``steps`` random admissible flips; returns (surface, script).

    Candidates are tried in random order from all anchors next to the
    surface, so the walk never needs the full applicability list.
    """
    script = []
    r_iter = itertools.cycle(r_values)
    for _ in range(steps):
        cells = sorted({sq.n for sq in s.squares if sq.type is IJ})
        bases = sorted({c for c in cells} | {(c[0], c[1], c[2] - 1) for c in cells})
        options = [(b, k, d) for b in bases for k in FlipKind for d in Direction
                   if sum(b) % 2 == TEMPLATES[k].parity]
        rng.shuffle(options)
        for base, kind, direction in options:
            r = next(r_iter) if kind.value.startswith("F15") and direction is Direction.FORWARD else None
            try:
                s2, _ = apply_flip(s, kind, base, r, direction)
            except FlipError:
                continue
            s = s2
            script.append(FlipRequest(kind, base, direction, r))
            break
        else:
            break
    return s, script


def black_interior_oracle(width, height):
    """Black vertices of a flat patch strictly inside its rectangle."""
    return sorted((a, b, 0) for a in range(1, width) for b in range(1, height) if is_black((a, b, 0)))
