"""A deformation sequence with nested r loops, run end to end.

Starting from a flat 3x3 patch, six flips build two mesas (one carrying
a tower) and a two-level pit.  The resulting surface has five r loops
at two depths.  Z-invariance is checked for the Ising model and the
classical action is compared before and after.
"""

from __future__ import annotations

from .classical import check_classical_zinvariance
from .flips import Direction, FlipKind, FlipRequest, run_script
from .models import ISING
from .partition import ZINV_TOL, check_z_invariance
from .surface import build_flat_surface, derive_spin_graph, validate_surface

P_VALUES = (1.2, 1.25, 1.3)
Q_VALUES = (0.1, 0.15, 0.2)
# classical boundary values, one per boundary black vertex in sorted order
BOUNDARY_VALUES = (1.76, 1.932, -0.09, -1.43, -2.997, 0.977)


def demo_script():
    f = Direction.FORWARD
    return [
        FlipRequest(FlipKind.F15B, (1, 2, 0), f, 0.55),   # seed of the first mesa
        FlipRequest(FlipKind.F24_2, (2, 2, 0), f, None),  # stretch it east
        FlipRequest(FlipKind.F15A, (0, 0, 0), f, 0.65),   # second mesa
        FlipRequest(FlipKind.F15B, (0, 0, 1), f, 0.75),   # tower on the second mesa
        FlipRequest(FlipKind.F15C, (2, 0, -1), f, 0.45),  # pit
        FlipRequest(FlipKind.F15D, (2, 0, -2), f, 0.35),  # deeper pit inside it
    ]


def demo_surfaces():
    s0 = build_flat_surface(3, 3, P_VALUES, Q_VALUES)
    s, ledger = run_script(s0, demo_script())
    return s0, s, ledger


def run_demo() -> dict:
    s0, s, ledger = demo_surfaces()
    script = demo_script()
    rep = validate_surface(s)
    z = check_z_invariance(s0, script, ISING)
    g0 = derive_spin_graph(s0)
    boundary = dict(zip(sorted(g0.boundary), BOUNDARY_VALUES))
    cz = check_classical_zinvariance(s0, script, boundary)
    loops = [{"label": l.label, "depth": l.depth, "n_k": l.n_k, "orientation": l.orientation}
             for l in rep.r_loops]
    return {
        "pass": rep.ok and z.ok and cz.ok,
        "tolerance": {"zinv": ZINV_TOL, "classical": cz.tolerance},
        "steps": [r.to_dict() for r in script],
        "r_loops": loops,
        "squares": len(s.squares),
        "interior_spins": [z.interior0, z.interior],
        "ledger": [str(t) for t in ledger.tokens()],
        "zinv": z.to_dict(),
        "classical_zinv": cz.to_dict(),
    }
