"""``fracdisc`` command line interface.

Exit status is 0 on success; library errors map to the ``exit_code`` of
their class (see :mod:`fracdisc.errors`).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import exact, gl
from .errors import FracDiscError, NonUniformGrid
from .harness import (
    METHODS,
    EXACT_METHODS,
    encode,
    compare_methods,
    emit,
    fmt_number,
    load_problem,
    run_example1,
    write_transitions_csv,
    write_csv,
    format_vector,
)
from .problem import SeriesControl

log = logging.getLogger("fracdisc")


def _control(args) -> SeriesControl:
    return SeriesControl(max_terms=args.max_terms, tail_tol=args.tail_tol, quad_nodes=args.quad_nodes)


def _add_common(p: argparse.ArgumentParser, out_required: bool = False) -> None:
    p.add_argument("--out", type=Path, required=out_required, help="output directory")
    p.add_argument("--max-terms", type=int, default=200, help="series truncation cap (default 200)")
    p.add_argument("--tail-tol", type=float, default=1e-12, help="relative series tail cutoff (default 1e-12)")
    p.add_argument("--quad-nodes", type=int, default=64, help="Gauss-Jacobi nodes per interval (default 64)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracdisc",
        description="Discretize and simulate D^alpha x = A x + f, alpha = (2p+1)/(2q+1).",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="trajectory of one method")
    p.add_argument("--problem", type=Path, required=True)
    p.add_argument("--method", choices=METHODS, required=True)
    _add_common(p)

    p = sub.add_parser("fundamental", help="per-interval transition matrices")
    p.add_argument("--problem", type=Path, required=True)
    p.add_argument("--method", choices=METHODS, required=True)
    _add_common(p, out_required=True)

    p = sub.add_parser("compare", help="GL versus exact comparison report")
    p.add_argument("--problem", type=Path, required=True)
    _add_common(p, out_required=True)

    p = sub.add_parser("example1", help="rotation example, alpha = 1/3")
    _add_common(p)
    return parser


def _gl_transitions(problem):
    if not problem.is_uniform():
        raise NonUniformGrid("GL recursion requires a uniform grid")
    k = problem.steps
    seq = gl.gl_transition_sequence(problem.A, float(problem.order.alpha), (problem.T - problem.t0) / k, k)
    return [gl.gl_pair_transition(seq, i + 1, i) for i in range(k)]


def cmd_simulate(args) -> int:
    problem = load_problem(args.problem)
    ctrl = _control(args)
    if args.method == "gl":
        traj = gl.gl_trajectory(problem)
    else:
        traj = exact.propagate(problem, EXACT_METHODS[args.method], ctrl)
    n = problem.n
    header = ["t"] + [f"x_{i + 1}" for i in range(n)]
    rows = [[fmt_number(t)] + format_vector(x) for t, x in zip(traj.times, traj.states)]
    if args.out is None:
        import csv

        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return 0
    args.out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        doc = {
            "method": args.method,
            "times": traj.times.tolist(),
            "states": encode(traj.states),
            "diagnostics": {k: (encode(v) if isinstance(v, np.ndarray) else v)
                            for k, v in traj.diagnostics.get("product_check", {}).items()},
        }
        (args.out / "trajectory.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    else:
        write_csv(args.out / "trajectory.csv", header, rows)
    return 0


def cmd_fundamental(args) -> int:
    problem = load_problem(args.problem)
    if args.method == "gl":
        mats = _gl_transitions(problem)
    else:
        func = exact.FUNDAMENTAL[EXACT_METHODS[args.method]]
        ctrl = _control(args)
        mats = [func(problem.A, problem.order, lo, hi, ctrl) for lo, hi in problem.intervals()]
    args.out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        doc = {"method": args.method, "intervals": [list(iv) for iv in problem.intervals()],
               "transitions": [encode(m) for m in mats]}
        (args.out / "transitions.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    else:
        write_transitions_csv(args.out / "transitions.csv", problem.intervals(), [encode(m) for m in mats], problem.n)
    return 0


def cmd_compare(args) -> int:
    report = compare_methods(load_problem(args.problem), _control(args))
    emit(report, args.format, args.out)
    _summary(report)
    return 0


def cmd_example1(args) -> int:
    out = args.out if args.out is not None else Path("example1-output")
    report = run_example1(_control(args), out, args.format)
    _summary(report)
    print(f"artifacts written to {out}")
    return 0


def _summary(report) -> None:
    print(f"methods: x={report.methods[0]} y={report.methods[1]}  alpha={report.metadata['alpha']}")
    for (lo, hi), fro, chk in zip(report.intervals, report.transition_diff_frobenius,
                                  report.crosscheck_max_abs or [None] * len(report.intervals)):
        line = f"  [{lo:.4f}, {hi:.4f}]  ||Phi_y - Phi_x||_F = {fro if fro is None else f'{fro:.4e}'}"
        if chk is not None:
            line += f"  series-vs-quadrature = {chk:.2e}"
        print(line)
    if report.trajectory_diff_total is not None:
        print(f"  ||y - x||: total {report.trajectory_diff_total:.4f}, max-node {report.trajectory_diff_max:.4f},"
              f" sum-nodes {report.trajectory_diff_sum:.4f}")
    for f in report.failures:
        print(f"  failure: {f}")


COMMANDS = {
    "simulate": cmd_simulate,
    "fundamental": cmd_fundamental,
    "compare": cmd_compare,
    "example1": cmd_example1,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FracDiscError as exc:
        print(f"fracdisc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"fracdisc: IOError: {exc}", file=sys.stderr)
        return 12


if __name__ == "__main__":
    sys.exit(main())
