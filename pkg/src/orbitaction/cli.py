"""``orbit-kappa``: run scenario files and write reports.

Exit codes: 0 every requested verification passed, 1 a verification failed,
2 the scenario is malformed, 3 a numerical failure, 4 an I/O error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .characters import highest_weight_of_orbit, schur_eval, weyl_dimension
from .errors import NumericalFailure, ValidationError
from .kappa import (
    cap_convergence,
    compute_kappa,
    kappa_stabilizer,
    kappa_weyl,
    verify_base_point_independence,
    verify_deformation_derivative,
    verify_product,
)
from .liecore import random_skew_hermitian
from .orbit import SIGN, random_orbit_point, vertex_lattice_check
from .report import TaskResult, emit_report, format_summary
from .scenario import Scenario, ScenarioError, load_scenario

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def _point(sc: Scenario):
    seed = sc.numerics.seed if sc.point_seed is None else sc.point_seed
    return random_orbit_point(sc.spec, seed)


def _task_kappa(sc: Scenario) -> TaskResult:
    rep = compute_kappa(sc.spec, sc.loop, _point(sc), sc.numerics)
    return TaskResult(
        "kappa",
        _status(rep.passed),
        values=rep.values(),
        deviations=rep.pairwise_deviations,
        diagnostics={
            "area": rep.area,
            "hamiltonian_integral": rep.hamiltonian_integral,
            "closure_residual": rep.closure_residual,
            "unitarity_drift": rep.unitarity_drift,
            "quadrature": [list(r) for r in rep.quadrature_diagnostics],
            "direct_tol": sc.numerics.direct_tol,
            "exact_tol": sc.numerics.exact_tol,
        },
    )


def _task_independence(sc: Scenario) -> TaskResult:
    rep = verify_base_point_independence(sc.spec, sc.loop, sc.independence_points, sc.point_seed, sc.numerics)
    return TaskResult(
        "verify-independence",
        _status(rep.passed),
        values={"kappa_direct": list(rep.values)},
        deviations={"spread": rep.spread},
        diagnostics={"threshold": rep.threshold, "n_points": len(rep.values)},
    )


def _task_product(sc: Scenario) -> TaskResult:
    rep = verify_product(sc.spec, sc.loop, sc.second_loop, sc.numerics, x=_point(sc))
    names = ("first", "second", "product")
    values = {f"kappa_stabilizer_{k}": v for k, v in zip(names, rep.stabilizer)}
    if rep.direct is not None:
        values.update({f"kappa_direct_{k}": v for k, v in zip(names, rep.direct)})
    dev = {"stabilizer": rep.stabilizer_error}
    if rep.direct_error is not None:
        dev["direct"] = rep.direct_error
    return TaskResult(
        "verify-product",
        _status(rep.passed),
        values=values,
        deviations=dev,
        diagnostics={"stabilizer_tol": 2 * sc.numerics.exact_tol, "direct_tol": 2 * sc.numerics.direct_tol},
    )


def _task_deformation(sc: Scenario) -> TaskResult:
    d = sc.deformation
    C = d.get("C")
    if C is None:
        C = random_skew_hermitian(sc.spec.n, sc.numerics.seed + 1)
    rep = verify_deformation_derivative(
        sc.spec,
        sc.loop,
        C,
        _point(sc),
        ds=float(d.get("ds", 1e-3)),
        numerics=sc.numerics,
        n_points=int(d.get("n_points", 5)),
        seed=sc.point_seed,
    )
    return TaskResult(
        "verify-deformation",
        _status(rep.passed),
        values={
            "kappa": rep.kappa,
            "derivative": rep.derivative,
            "predicted": rep.predicted,
            "fdot_integral": rep.fdot_integral,
        },
        deviations={"derivative-predicted": abs(rep.derivative - rep.predicted), "x_spread": rep.x_spread},
        diagnostics={"tolerance": rep.tolerance, "fdot_integrals": rep.fdot_integrals},
    )


def _task_vertices(sc: Scenario) -> TaskResult:
    rep = vertex_lattice_check(sc.spec)
    return TaskResult(
        "vertices",
        _status(rep.passed),
        values={"differences": rep.differences, "n_vertices": len(rep.vertices)},
        deviations={"max_residual": rep.max_residual},
        diagnostics={"shifted_vertices": rep.shifted_vertices},
    )


def _task_character(sc: Scenario) -> TaskResult:
    if not sc.spec.is_regular:
        return TaskResult(
            "character",
            "skipped",
            values={"kappa_weyl": None},
            diagnostics={"reason": "orbit is not regular; the Weyl route needs a torus stabilizer"},
        )
    w = highest_weight_of_orbit(sc.spec)
    dim = weyl_dimension(w)
    at_one = schur_eval(w, np.ones(sc.spec.n))
    stab = kappa_stabilizer(sc.spec, sc.loop, sc.numerics)
    weyl = kappa_weyl(sc.spec, sc.loop, sc.numerics)
    dev = {"stabilizer-weyl": abs(stab - weyl), "schur_at_identity-dimension": abs(at_one - dim)}
    ok = dev["stabilizer-weyl"] < sc.numerics.exact_tol and round(at_one.real) == dim
    return TaskResult(
        "character",
        _status(ok),
        values={"highest_weight": list(w), "dimension": dim, "kappa_stabilizer": stab, "kappa_weyl": weyl},
        deviations=dev,
    )


def _task_convergence(sc: Scenario) -> TaskResult:
    conv = cap_convergence(sc.spec, sc.loop, _point(sc), sc.numerics)
    rows = conv.rows()
    return TaskResult(
        "convergence",
        _status(conv.converged),
        values={"area": conv.value},
        deviations={"last_change": abs(conv.extrapolated[-1] - conv.extrapolated[-2]) if len(rows) > 1 else None},
        diagnostics={"rule": sc.numerics.area_rule, "table": [list(r) for r in rows]},
        table=rows,
    )


TASK_RUNNERS = {
    "kappa": _task_kappa,
    "verify-independence": _task_independence,
    "verify-product": _task_product,
    "verify-deformation": _task_deformation,
    "vertices": _task_vertices,
    "character": _task_character,
    "convergence": _task_convergence,
}


def run_tasks(sc: Scenario) -> tuple[list[TaskResult], int]:
    """Run the scenario's tasks in order; numerical failures are recorded, not raised."""
    results, code = [], EXIT_PASS
    for name in sc.tasks:
        try:
            r = TASK_RUNNERS[name](sc)
        except NumericalFailure as e:
            r = TaskResult(name, "error", error=f"{type(e).__name__}: {e}")
            code = EXIT_NUMERIC
        except ValidationError as e:
            r = TaskResult(name, "error", error=f"{type(e).__name__}: {e}")
            if code != EXIT_NUMERIC:
                code = EXIT_INPUT
        results.append(r)
    if code == EXIT_PASS and not all(r.ok for r in results):
        code = EXIT_FAIL
    return results, code


def build_report(sc: Scenario, results: list[TaskResult], timestamp: str | None = None) -> dict:
    n = sc.numerics
    return {
        "header": {"timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")},
        "software_version": __version__,
        "scenario": sc.name,
        "scenario_hash": sc.digest,
        "sign_convention": SIGN,
        "numerics": {
            "lax_steps": n.lax_steps,
            "cap_grid": list(n.cap_grid),
            "quad_tol": n.quad_tol,
            "seed": n.seed,
            "max_refine": n.max_refine,
            "area_rule": n.area_rule,
        },
        "passed": all(r.ok for r in results),
        "per_task": [r.as_dict() for r in results],
    }


def run_scenario(path, out_dir=".", overrides: dict | None = None, stream=None) -> int:
    """Load, run and report one scenario; returns the process exit code."""
    stream = sys.stdout if stream is None else stream
    try:
        sc = load_scenario(path)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: cannot read {path}: {e.strerror or e}", file=sys.stderr)
        return EXIT_IO
    if overrides:
        sc.numerics = sc.numerics.with_(**{k: v for k, v in overrides.items() if v is not None})

    results, code = run_tasks(sc)
    report = build_report(sc, results)
    try:
        emit_report(report, results, out_dir, Path(sc.source).stem)
    except OSError as e:
        print(f"error: cannot write report to {out_dir}: {e.strerror or e}", file=sys.stderr)
        return EXIT_IO
    stream.write(format_summary(report, results))
    for r in results:
        if r.error:
            print(f"error in task {r.name}: {r.error}", file=sys.stderr)
    return code


def validate_scenario(path, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    try:
        sc = load_scenario(path)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: cannot read {path}: {e.strerror or e}", file=sys.stderr)
        return EXIT_IO
    stream.write(
        f"ok: {sc.name}: u({sc.spec.n}) orbit, multiplicities {list(sc.spec.multiplicities)}, "
        f"char_ints {list(sc.spec.char_ints)}, tasks {', '.join(sc.tasks)}\n"
    )
    return EXIT_PASS


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _steps(s: str) -> int:
    v = int(s)
    if v < 2:
        raise argparse.ArgumentTypeError(f"need at least 2 steps, got {s}")
    return v


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbit-kappa", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write reports")
    run.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
    run.add_argument("--out", default=".", help="output directory (default: current directory)")
    run.add_argument("--seed", type=int, help="override numerics.seed")
    run.add_argument("--steps", type=_steps, help="override numerics.lax_steps")
    run.add_argument("--quad-tol", type=_positive_float, help="override numerics.quad_tol")

    val = sub.add_parser("validate", help="parse and validate a scenario without running it")
    val.add_argument("scenario")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "validate":
        return validate_scenario(args.scenario)
    overrides = {"seed": args.seed, "lax_steps": args.steps, "quad_tol": args.quad_tol}
    return run_scenario(args.scenario, args.out, overrides)


if __name__ == "__main__":
    sys.exit(main())
