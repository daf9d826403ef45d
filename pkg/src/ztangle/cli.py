"""Command-line front end.

Every command prints (or writes with ``-o``) one JSON report carrying
``schema``, ``command``, ``pass``, ``tolerance`` and ``details``.  Exit
codes: 0 pass, 1 verification failure, 2 usage error, 3 malformed input.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from typing import Callable, Dict, List, Optional, Sequence

from . import classical, flips, partition, relations
from .models import MODELS, ModelDomainError, get_model
from .surface import Surface, SurfaceError, build_flat_surface, derive_spin_graph, validate_surface

SCHEMA = "ztangle/1"
EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_SCHEMA = 0, 1, 2, 3


class SchemaError(ValueError):
    pass


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc


def _load_surface(path: str) -> Surface:
    try:
        return Surface.from_dict(_load_json(path))
    except SurfaceError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _load_script(path: str) -> List[flips.FlipRequest]:
    try:
        return flips.parse_script(_load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{path}: malformed flip script ({exc})") from exc


def _load_map(path: str) -> Dict:
    try:
        return partition.parse_boundary(_load_json(path))
    except partition.BoundaryError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _cplx(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def _report(command: str, ok: bool, tolerance, details: dict) -> dict:
    return {"schema": SCHEMA, "command": command, "pass": bool(ok), "tolerance": tolerance, "details": details}


# -- commands -----------------------------------------------------------------

def cmd_surface_new(a) -> dict:
    s = build_flat_surface(a.width, a.height, a.p, a.q)
    if a.output:
        with open(a.output, "w") as fh:
            fh.write(s.to_json() + "\n")
    return _report("surface-new", True, None, {"surface": s.to_dict(), "written": a.output})


def cmd_surface_validate(a) -> dict:
    s = _load_surface(a.surface)
    rep = validate_surface(s)
    details = {
        "ok": rep.ok,
        "violations": [{"invariant": v.invariant, "message": v.message,
                        "squares": [str(sq) for sq in v.squares],
                        "anchor": list(v.anchor) if v.anchor else None} for v in rep.violations],
        "r_loops": [{"id": l.id, "label": l.label, "orientation": l.orientation, "depth": l.depth,
                     "n_k": l.n_k, "squares": len(l.squares)} for l in rep.r_loops],
        "squares": len(s.squares),
    }
    return _report("surface-validate", rep.ok, None, details)


def _flip_requests(a) -> List[flips.FlipRequest]:
    if a.script:
        return _load_script(a.script)
    if not a.flip or a.anchor is None:
        raise argparse.ArgumentTypeError("give --script or both --flip and --anchor")
    anchor = tuple(int(v) for v in a.anchor)
    r = flips.LoopRef(a.r_loop) if a.r_loop is not None else a.r_value
    direction = flips.Direction.INVERSE if a.inverse else flips.Direction.FORWARD
    return [flips.FlipRequest(flips.FlipKind(a.flip), anchor, direction, r)]


def cmd_flip_apply(a) -> dict:
    s = _load_surface(a.surface)
    script = _flip_requests(a)
    try:
        new, ledger = flips.run_script(s, script)
    except flips.ScriptError as exc:
        return _report("flip-apply", False, None, {"error": str(exc), "step": exc.step})
    if a.output:
        with open(a.output, "w") as fh:
            fh.write(new.to_json() + "\n")
    details = {"surface": new.to_dict(), "ledger": ledger.to_dict(),
               "r_loops": validate_surface(new).labels(), "written": a.output}
    return _report("flip-apply", True, None, details)


def cmd_partition(a) -> dict:
    s = _load_surface(a.surface)
    model = get_model(a.model)
    g = derive_spin_graph(s)
    boundary = _load_map(a.boundary) if a.boundary else partition.uniform_boundary(
        g, model.spins[0] if model.is_discrete else 0.0)
    z = partition.partition_function(g, model, boundary, a.max_interior)
    return _report("partition", True, None, {"Z": _cplx(z), "interior": len(g.interior),
                                             "edges": len(g.edges), "model": model.name})


def cmd_zinv(a) -> dict:
    s0 = _load_surface(a.surface0)
    script = _load_script(a.script)
    model = get_model(a.model)
    boundary = _load_map(a.boundary) if a.boundary else None
    rep = partition.check_z_invariance(s0, script, model, boundary, a.tol, a.max_interior)
    return _report("zinv", rep.ok, a.tol, rep.to_dict())


def cmd_verify_str(a) -> dict:
    model = get_model(a.model)
    probe = [tuple(b) for b in a.boundary] if a.boundary else None
    rep = relations.check_str(model, a.p, a.q, a.r, relations.Form(a.form), probe, a.tol)
    details = rep.to_dict()
    if not model.is_discrete:
        # independent reference value for the continuous model
        from .models import fishingnet_R
        ref = fishingnet_R(a.p - a.q, a.q - a.r)
        details["R_reference"] = ref
        details["R_rel_error"] = abs(rep.extracted_R - ref) / ref
        ok = rep.ok and details["R_rel_error"] < rep.tolerance
    else:
        ok = rep.ok
    return _report("verify-str", ok, rep.tolerance, details)


def cmd_verify_inversion(a) -> dict:
    model = get_model(a.model)
    details = {}
    if not model.is_discrete:
        try:
            relations.check_inversions(model, a.p, a.q, second=True)
        except relations.UnsupportedRelation as exc:
            details["relation2"] = f"unsupported: {exc}"
    rep = relations.check_inversions(model, a.p, a.q, tolerance=a.tol)
    details.update(rep.to_dict())
    if rep.f_pair is not None and model.name == "ising":
        from .models import ising_fpair
        ref = ising_fpair(a.p - a.q)
        details["f_pair_reference"] = _cplx(ref)
        details["f_pair_error"] = abs(rep.f_pair - ref)
    return _report("verify-inversion", rep.ok, a.tol, details)


def cmd_verify_str0(a) -> dict:
    model = get_model(a.model)
    triples = [tuple(a.boundary)] if a.boundary else list(itertools.product(model.spins, repeat=3))
    rows = [{"boundary": list(b), "residual": relations.check_str0(model, a.p, a.q, a.r, b)} for b in triples]
    worst = max(r["residual"] for r in rows)
    return _report("verify-str0", worst < a.tol, a.tol, {"max_residual": worst, "rows": rows})


def cmd_classical_solve(a) -> dict:
    s = _load_surface(a.surface)
    g = derive_spin_graph(s)
    boundary = _load_map(a.boundary)
    init = _load_map(a.init) if a.init else classical.NEIGHBOR_MEAN
    rep = classical.solve_laplace(g, boundary, init, a.tol)
    return _report("classical-solve", rep.converged, a.tol, rep.to_dict())


def cmd_classical_verify_str(a) -> dict:
    x1, x2, x3 = a.x
    res = classical.check_classical_str(x1, x2, x3, a.alpha, a.beta)
    x0 = classical.three_leg_solve(x1, x2, x3, a.alpha, a.beta)
    return _report("classical-verify-str", res < a.tol, a.tol, {"x0": x0, "residual": res})


def cmd_classical_closure(a) -> dict:
    x13, x23, x12 = a.x
    res = classical.check_closure(x13, x23, x12, a.p, a.q, a.r)
    return _report("classical-closure", res < a.tol, a.tol, {"residual": res})


def cmd_classical_zinv(a) -> dict:
    s0 = _load_surface(a.surface0)
    script = _load_script(a.script)
    boundary = _load_map(a.boundary)
    rep = classical.check_classical_zinvariance(s0, script, boundary, tolerance=a.tol)
    return _report("classical-zinv", rep.ok, a.tol, rep.to_dict())


def cmd_demo(a) -> dict:
    from .demo import run_demo
    out = run_demo()
    return _report("demo", out["pass"], out["tolerance"], out)


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ztangle", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        p.add_argument("-o", "--output", help="write the main artefact (surface) to this file")
        p.add_argument("--report", help="write the JSON report here instead of stdout")
        return p

    p = add("surface-new", cmd_surface_new, "flat width x height patch")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--p", type=_floats, required=True, help="one rapidity per row")
    p.add_argument("--q", type=_floats, required=True, help="one rapidity per column")

    p = add("surface-validate", cmd_surface_validate, "check every surface invariant")
    p.add_argument("surface")

    p = add("flip-apply", cmd_flip_apply, "apply one flip or a script")
    p.add_argument("--surface", required=True)
    p.add_argument("--script")
    p.add_argument("--flip", choices=[k.value for k in flips.FlipKind])
    p.add_argument("--anchor", type=_floats)
    p.add_argument("--r-value", type=float)
    p.add_argument("--r-loop", type=int)
    p.add_argument("--inverse", action="store_true")

    p = add("partition", cmd_partition, "exact partition function")
    p.add_argument("--surface", required=True)
    p.add_argument("--model", default="ising", choices=sorted(MODELS))
    p.add_argument("--boundary")
    p.add_argument("--max-interior", type=int)

    p = add("zinv", cmd_zinv, "Z-invariance of a flip script")
    p.add_argument("--surface0", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--model", default="ising", choices=sorted(MODELS))
    p.add_argument("--boundary")
    p.add_argument("--tol", type=float, default=partition.ZINV_TOL)
    p.add_argument("--max-interior", type=int)

    p = add("verify-str", cmd_verify_str, "star-triangle relation")
    p.add_argument("--model", default="ising", choices=sorted(MODELS))
    for name in ("p", "q", "r"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--form", choices=[f.value for f in relations.Form], default="second")
    p.add_argument("--boundary", type=_floats, action="append", help="x1,x2,x3 (continuous models)")
    p.add_argument("--tol", type=float)

    p = add("verify-inversion", cmd_verify_inversion, "inversion relations")
    p.add_argument("--model", default="ising", choices=sorted(MODELS))
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--tol", type=float, default=relations.DISCRETE_TOL)

    p = add("verify-str0", cmd_verify_str0, "three-square identity")
    p.add_argument("--model", default="ising", choices=sorted(MODELS))
    for name in ("p", "q", "r"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--boundary", type=_floats, help="x1,x3,x4; default all")
    p.add_argument("--tol", type=float, default=1e-11)

    p = add("classical-solve", cmd_classical_solve, "Newton solve of the Laplace system")
    p.add_argument("--surface", required=True)
    p.add_argument("--boundary", required=True)
    p.add_argument("--init")
    p.add_argument("--tol", type=float, default=classical.LAPLACE_TOL)

    p = add("classical-verify-str", cmd_classical_verify_str, "classical star-triangle relation")
    p.add_argument("--x", type=_floats, required=True, help="x1,x2,x3")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)

    p = add("classical-closure", cmd_classical_closure, "closure relation on one cube")
    p.add_argument("--x", type=_floats, required=True, help="x13,x23,x12")
    for name in ("p", "q", "r"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9)

    p = add("classical-zinv", cmd_classical_zinv, "classical Z-invariance of the action")
    p.add_argument("--surface0", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--boundary", required=True)
    p.add_argument("--tol", type=float, default=1e-9)

    add("demo", cmd_demo, "deformation sequence with five nested r loops, end to end")
    return ap


def _normalise(argv: Sequence[str]) -> List[str]:
    argv = list(argv)
    # "classical solve" is accepted as a spelling of "classical-solve"
    if len(argv) >= 2 and argv[0] == "classical" and not argv[1].startswith("-"):
        argv = [f"classical-{argv[1]}"] + argv[2:]
    return argv


def _check_lengths(a) -> None:
    """Comma-separated flags that must carry exactly three numbers."""
    groups = [("x", getattr(a, "x", None)), ("anchor", getattr(a, "anchor", None))]
    boundary = getattr(a, "boundary", None)
    if isinstance(boundary, list):
        # verify-str repeats --boundary; verify-str0 takes a single triple
        groups += [("boundary", b) for b in boundary] if boundary and isinstance(boundary[0], list) \
            else [("boundary", boundary)]
    for name, val in groups:
        if val is not None and len(val) != 3:
            raise argparse.ArgumentTypeError(f"--{name} needs three values, got {len(val)}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = _normalise(sys.argv[1:] if argv is None else argv)
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        _check_lengths(a)
        report = a.fn(a)
    except argparse.ArgumentTypeError as exc:
        print(f"ztangle: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, partition.BoundaryError) as exc:
        # a boundary map that does not cover the graph fails its schema
        print(f"ztangle: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (SurfaceError, flips.FlipError, partition.PartitionError, relations.RelationError,
            classical.ClassicalError, ModelDomainError, ValueError) as exc:
        print(f"ztangle: {type(exc).__name__}: {exc}", file=sys.stderr)
        report = _report(a.command, False, None, {"error": str(exc), "error_type": type(exc).__name__})
        _emit(a, report)
        return EXIT_FAIL
    _emit(a, report)
    if not report["pass"]:
        print(f"ztangle: {a.command} failed verification", file=sys.stderr)
    return EXIT_PASS if report["pass"] else EXIT_FAIL


def _emit(a, report: dict) -> None:
    text = json.dumps(report, indent=2, default=_json_default)
    if getattr(a, "report", None):
        with open(a.report, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(obj):
    if isinstance(obj, complex):
        return _cplx(obj)
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


if __name__ == "__main__":
    sys.exit(main())
