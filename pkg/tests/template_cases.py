"""Flip scripts that bring every template into play on a flat patch.

Each case is (patch size, setup steps, target flip).  The setup scripts
were found by a random-walk search over applicable flips and then
frozen here; applying the target after its setup must succeed.
"""

from ztangle.flips import Direction, FlipKind, FlipRequest
from ztangle.surface import build_flat_surface

# rapidities ordered p > r > q with every difference inside (0.05, 1.45)
P_VALUES = {3: [1.2, 1.25, 1.3], 4: [1.2, 1.25, 1.3, 1.35]}
Q_VALUES = {3: [0.1, 0.15, 0.2], 4: [0.1, 0.15, 0.2, 0.25]}
R_VALUES = (0.55, 0.65, 0.75, 0.5, 0.8, 0.6, 0.7, 0.45)

# setup steps as (kind, anchor[, "i"]) with the forward F15 steps taking
# the next entry of R_VALUES
_FORWARD_SETUPS = {
    "F15A": (3, [], (0, 0, 0)),
    "F15B": (3, [], (0, 1, 0)),
    "F15C": (3, [], (0, 0, -1)),
    "F15D": (3, [], (0, 1, -1)),
    "F24_1": (3, [("F15B", (1, 2, 0))], (1, 1, 0)),
    "F24_2": (3, [("F15B", (1, 2, 0))], (2, 2, 0)),
    "F24_3": (3, [("F15A", (2, 2, 0))], (2, 1, 0)),
    "F24_4": (3, [("F15A", (0, 2, 0))], (1, 2, 0)),
    "F24_5": (3, [("F15C", (2, 0, -1))], (2, 1, -1)),
    "F24_6": (3, [("F15C", (2, 0, -1))], (1, 0, -1)),
    "F24_7": (3, [("F15D", (2, 1, -1))], (2, 2, -1)),
    "F24_8": (3, [("F15D", (2, 1, -1))], (1, 1, -1)),
    "F33_1": (3, [("F15A", (0, 2, 0)), ("F24_3", (0, 1, 0)), ("F24_4", (1, 2, 0))], (1, 1, 0)),
    "F33_2": (3, [("F15B", (0, 1, 0)), ("F24_1", (0, 0, 0)), ("F24_2", (1, 1, 0)), ("F33_2", (1, 0, 0), "i")],
              (1, 0, 0)),
    "F33_3": (3, [("F15D", (2, 1, -1)), ("F24_7", (2, 2, -1)), ("F24_8", (1, 1, -1)), ("F33_3", (1, 2, -1), "i")],
              (1, 2, -1)),
    "F33_4": (3, [("F15C", (1, 1, -1)), ("F24_5", (1, 2, -1)), ("F24_6", (0, 1, -1))], (0, 2, -1)),
}


def _requests(steps):
    out, r_iter = [], iter(R_VALUES)
    for step in steps:
        kind, anchor = FlipKind(step[0]), tuple(step[1])
        direction = Direction.INVERSE if len(step) > 2 else Direction.FORWARD
        r = next(r_iter) if kind.value.startswith("F15") and direction is Direction.FORWARD else None
        out.append(FlipRequest(kind, anchor, direction, r))
    return out


def template_case(kind: str, direction: str = "forward"):
    """(flat start surface, setup script, target request) for one template."""
    size, setup, anchor = _FORWARD_SETUPS[kind]
    steps = list(setup) + [(kind, anchor)]
    if direction == "inverse":
        steps.append((kind, anchor, "i"))
        setup_steps, target = steps[:-1], steps[-1]
    else:
        setup_steps, target = steps[:-1], steps[-1]
    reqs = _requests(setup_steps + [target])
    s0 = build_flat_surface(size, size, P_VALUES[size], Q_VALUES[size])
    return s0, reqs[:-1], reqs[-1]


ALL_CASES = [(k.value, d) for k in FlipKind for d in ("forward", "inverse")]
