"""Walk through a deformation of a flat patch, one flip at a time.

Each step prints the r loops present on the surface, the factors the
flip contributed, and how far Z on the new surface is from the ledger
times Z on the flat patch.  At the end the classical action before and
after is compared.

    python3 demos/nested_loops.py
"""

import random

from ztangle.classical import check_classical_zinvariance, solve_laplace
from ztangle.demo import BOUNDARY_VALUES, demo_script, demo_surfaces
from ztangle.flips import evaluate_ledger, run_script
from ztangle.models import ISING
from ztangle.partition import partition_function
from ztangle.surface import derive_spin_graph, validate_surface


def main():
    s0, _, _ = demo_surfaces()
    g0 = derive_spin_graph(s0)
    rng = random.Random(0)
    spins = {v: rng.choice((1, -1)) for v in g0.boundary}
    z0 = partition_function(g0, ISING, spins)
    print(f"flat patch: {len(s0.squares)} squares, {len(g0.interior)} interior spins, Z0 = {z0:.6g}")

    script = demo_script()
    for n in range(1, len(script) + 1):
        s, ledger = run_script(s0, script[:n])
        g = derive_spin_graph(s)
        z = partition_function(g, ISING, spins)
        phi = evaluate_ledger(ledger, ISING)
        step = script[n - 1]
        labels = " ".join(validate_surface(s).labels()) or "-"
        new = " ".join(str(t) for t in ledger.entries[-1].tokens)
        print(f"{n}. {step.kind.value} at {step.anchor}: loops [{labels}], factors {new}")
        print(f"   {len(g.interior)} interior spins, |Z - ledger Z0| / |Z| = {abs(z - phi * z0) / abs(z):.2e}")

    boundary = dict(zip(sorted(g0.boundary), BOUNDARY_VALUES))
    lap = solve_laplace(g0, boundary)
    rep = check_classical_zinvariance(s0, script, boundary)
    print(f"classical: Newton took {lap.iterations} steps, action {rep.action0:.12f} -> {rep.action:.12f}, "
          f"spread over flat probes {rep.flat_spread:.1e}")


if __name__ == "__main__":
    main()
