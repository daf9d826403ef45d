"""The ten acceptance criteria, one test each.

Every test prints a single ``PASS`` or ``FAIL`` line with the worst
observed error and the wall time.  Run directly for the summary only::

    python3 tests/test_acceptance.py
"""

import itertools
import math
import os
import random
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ztangle.classical import (ClassicalError, check_classical_str, check_classical_zinvariance, check_closure,
                               gradient, jacobian, solve_laplace, three_leg_solve)
from ztangle.demo import BOUNDARY_VALUES, demo_script
from ztangle.flips import Direction, FlipKind, apply_flip, applicable_flips, evaluate_tokens, run_script, verify_template
from ztangle.models import FISHINGNET, ISING, fishingnet_R, ising_fpair
from ztangle.partition import check_z_invariance
from ztangle.relations import Form, UnsupportedRelation, check_inversions, check_str, check_str0
from ztangle.surface import EdgeKind, EdgeSpec, build_flat_surface, derive_spin_graph, graph_from_edges

from helpers import random_walk
from template_cases import ALL_CASES, P_VALUES, Q_VALUES, template_case


def flat3():
    return build_flat_surface(3, 3, P_VALUES[3], Q_VALUES[3])


def classical_boundary(s0):
    return dict(zip(sorted(derive_spin_graph(s0).boundary), BOUNDARY_VALUES))


def random_scripts(count, seed, max_len=6, max_interior=12):
    """Random admissible scripts whose surfaces keep at most ``max_interior`` spins."""
    rng = random.Random(seed)
    s0 = flat3()
    out = []
    while len(out) < count:
        s, script = random_walk(s0, rng, rng.randint(1, max_len))
        if len(derive_spin_graph(s).interior) <= max_interior:
            out.append(script)
    return out


# -- criteria ------------------------------------------------------------------

def criterion_1():
    grid = np.linspace(0.15, 0.65, 5)
    worst = 0.0
    for a, b in itertools.product(grid, grid):
        r = 0.2
        p, q = r + a + b, r + b
        for form in Form:
            rep = check_str(ISING, p, q, r, form)
            worst = max(worst, rep.max_rel_residual, rep.R_spread)
    return worst < 1e-12, f"25 pairs x 2 forms x 8 configs, worst {worst:.1e}", 1.0


def criterion_2():
    pairs = [(math.pi / 3, math.pi / 3), (math.pi / 4, math.pi / 2), (2 * math.pi / 5, math.pi / 5)]
    triples = [(0.0, 1.0, 3.0), (-1.5, 0.4, 2.2), (0.3, -0.8, 1.1), (2.0, 2.7, -0.5), (-2.2, -1.0, 0.6)]
    worst = 0.0
    for alpha, beta in pairs:
        ref = fishingnet_R(alpha, beta)
        for x in triples:
            rep = check_str(FISHINGNET, alpha + beta + 0.1, beta + 0.1, 0.1, probe=[x])
            worst = max(worst, rep.max_rel_residual, abs(rep.extracted_R - ref) / ref)
    return worst < 1e-6, f"3 pairs x 5 triples against the gamma formula, worst {worst:.1e}", 30.0


def criterion_3():
    rel1 = rel2 = fpair = 0.0
    for p, q in [(0.8, 0.2), (1.1, 0.3), (0.5, 0.45), (1.3, 0.1)]:
        rep = check_inversions(ISING, p, q)
        rel1 = max(rel1, rep.relation1_residual)
        rel2 = max(rel2, rep.relation2_offdiag)
        fpair = max(fpair, abs(rep.f_pair - 2j / math.tan(p - q)), abs(rep.f_pair - ising_fpair(p - q)))
    try:
        check_inversions(FISHINGNET, 1.3, 0.4, second=True)
        refused = False
    except UnsupportedRelation:
        refused = True
    ok = rel1 < 1e-14 and rel2 < 1e-12 and fpair < 1e-12 and refused
    return ok, (f"relation 1 {rel1:.1e}, relation 2 off-diagonal {rel2:.1e}, f-pair {fpair:.1e}, "
                f"continuous relation 2 refused={refused}"), None


def criterion_4():
    worst = 0.0
    for kind in FlipKind:
        for rap in [(0.9, 0.5, 0.2), (1.3, 0.2, 0.75)]:
            chk = verify_template(kind, ISING, rap)
            worst = max(worst, chk.residual, chk.spread)
    roundtrip = 0.0
    identity = True
    for kind in FlipKind:
        s0, setup, target = template_case(kind.value)
        s, _ = run_script(s0, setup)
        there, tokens = apply_flip(s, target.kind, target.anchor, target.r_value, Direction.FORWARD)
        back, inv_tokens = apply_flip(there, target.kind, target.anchor, None, Direction.INVERSE)
        identity &= back == s
        roundtrip = max(roundtrip, abs(evaluate_tokens(list(tokens) + list(inv_tokens), ISING) - 1))
    ok = worst < 1e-12 and identity and roundtrip < 1e-12
    return ok, f"16 templates, worst {worst:.1e}; round trips identity={identity}, ledger {roundtrip:.1e}", None


def criterion_5():
    s0 = flat3()
    g0 = derive_spin_graph(s0)
    rng = random.Random(17)
    singles = [[req] for req in applicable_flips(s0, r_value=0.6)]
    scripts = singles + random_scripts(10, seed=23)
    worst, most = 0.0, 0
    for script in scripts:
        for boundary in (None, {v: rng.choice((1, -1)) for v in g0.boundary}):
            rep = check_z_invariance(s0, script, ISING, boundary)
            worst = max(worst, rep.residual)
            most = max(most, rep.interior)
    ok = worst < 1e-10 and most <= 12 and len(singles) == 18
    return ok, (f"{len(singles)} single flips + 10 random scripts, <= {most} interior spins, "
                f"worst {worst:.1e}"), 60.0


def criterion_6():
    worst = 0.0
    for p, q, r in [(0.9, 0.5, 0.2), (1.2, 0.7, 0.4), (0.8, 0.25, 0.6)]:
        for b in itertools.product((1, -1), repeat=3):
            worst = max(worst, check_str0(ISING, p, q, r, b))
    return worst < 1e-11, f"3 settings x 8 triples, worst {worst:.1e}", None


def _bisect(x1, x2, x3, alpha, beta, lo=-1e7, hi=1e7):
    def poly(x):
        return alpha * (x2 - x) * (x3 - x) - (alpha + beta) * (x1 - x) * (x3 - x) + beta * (x1 - x) * (x2 - x)
    flo = poly(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = poly(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def criterion_7():
    rng = random.Random(29)
    worst, done = 0.0, 0
    while done < 100:
        xs = [rng.uniform(-3, 3) for _ in range(3)]
        alpha, beta = rng.uniform(0.1, 1.5), rng.uniform(0.1, 1.5)
        try:
            x0 = three_leg_solve(*xs, alpha, beta)
        except ClassicalError:
            continue
        if abs(x0) > 1e5:
            continue
        ref = _bisect(*xs, alpha, beta)
        worst = max(worst, abs(x0 - ref) / max(1.0, abs(ref)))
        done += 1
    printed = three_leg_solve(0, 1, 3, 1, 1)
    return worst < 1e-10 and printed == -3.0, f"100 instances, worst {worst:.1e}; (0,1,3,1,1) -> {printed}", None


def criterion_8():
    rng = random.Random(31)
    triples = [[rng.uniform(-2, 2) for _ in range(3)] for _ in range(20)]
    grid = np.linspace(0.25, 1.15, 5)
    worst = max(check_classical_str(*x, a, b) for a in grid for b in grid for x in triples)
    return worst < 1e-12, f"5x5 grid x 20 triples, worst {worst:.1e}", None


def criterion_9():
    centre, ends = (0, 0, 0), [(2, 0, 0), (4, 0, 0), (6, 0, 0), (8, 0, 0)]
    edges = [EdgeSpec(EdgeKind.PLAIN, c, 0.0, centre, e) for c, e in zip((1, -1, 1, -1), ends)]
    g = graph_from_edges(edges, [centre])
    rep = solve_laplace(g, dict(zip(ends, (0, 2, 1, 3))))
    root_err = abs(rep.field[centre] - (3 - math.sqrt(3)) / 2)

    s0 = flat3()
    g0 = derive_spin_graph(s0)
    flat = solve_laplace(g0, classical_boundary(s0))
    sup = max(rep.residual_sup, flat.residual_sup)

    rng = random.Random(37)
    fd_err = 0.0
    for g_ in (g0, derive_spin_graph(run_script(s0, demo_script())[0])):
        unknowns = list(g_.interior)
        for _ in range(5):
            f = {v: rng.uniform(-3, 3) for v in g_.black_vertices}
            J = jacobian(g_, f, unknowns)
            h = 1e-6
            fd = np.zeros_like(J)
            for m, v in enumerate(unknowns):
                up, dn = dict(f), dict(f)
                up[v] += h
                dn[v] -= h
                fd[:, m] = (gradient(g_, up, unknowns) - gradient(g_, dn, unknowns)) / (2 * h)
            fd_err = max(fd_err, float(np.max(np.abs(J - fd)) / np.max(np.abs(J))))
    ok = rep.converged and flat.converged and root_err < 1e-10 and sup < 1e-10 and fd_err < 1e-6
    return ok, f"root error {root_err:.1e}, residual {sup:.1e}, Jacobian vs differences {fd_err:.1e}", None


def criterion_10():
    worst, spread = 0.0, 0.0
    for kind, direction in ALL_CASES:
        s0, setup, target = template_case(kind, direction)
        rep = check_classical_zinvariance(s0, setup + [target], classical_boundary(s0))
        if not rep.laplace.converged:
            return False, f"{kind} {direction}: no stationary point on the start surface", None
        worst = max(worst, rep.delta)
        spread = max(spread, rep.flat_spread)
    s0 = flat3()
    for script in random_scripts(10, seed=41) + [demo_script()]:
        rep = check_classical_zinvariance(s0, script, classical_boundary(s0))
        worst = max(worst, rep.delta)
        spread = max(spread, rep.flat_spread)
    rng = random.Random(43)
    closure = 0.0
    for _ in range(20):
        xs = [rng.uniform(-2, 2) for _ in range(3)]
        p = rng.uniform(0, 0.5)
        q = p + rng.uniform(0.2, 1.0)
        r = q + rng.uniform(0.2, 1.0)
        closure = max(closure, check_closure(*xs, p, q, r))
    ok = worst < 1e-9 and spread < 1e-10 and closure < 1e-9
    return ok, (f"32 template cases + 11 scripts, action {worst:.1e}, flat spread {spread:.1e}; "
                f"closure on 20 cubes {closure:.1e}"), None


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def evaluate(number):
    t0 = time.perf_counter()
    ok, summary, budget = CRITERIA[number - 1]()
    elapsed = time.perf_counter() - t0
    if budget is not None and elapsed >= budget:
        ok = False
        summary += f"; over the {budget:g} s budget"
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {summary} ({elapsed:.2f} s)"
    return ok, line


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(number, capsys):
    ok, line = evaluate(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(n) for n in range(1, 11)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
