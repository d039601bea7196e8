"""Problem files, GL-vs-exact comparison and report output."""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import exact, gl
from .errors import FracDiscError, NonUniformGrid, ParseError, ValidationError
from .matcore import real_if_effectively_real
from .problem import FracOrder, PiecewiseConstantSignal, ProblemSpec, SeriesControl

log = logging.getLogger(__name__)

METHODS = ("gl", "exact-series", "exact-quad")
EXACT_METHODS = {"exact-series": "series", "exact-quad": "quadrature"}
PROBLEM_FIELDS = {"A", "x0", "p", "q", "t0", "T", "steps", "grid", "forcing"}


# -- problem files -----------------------------------------------------------


def _key_line(text: str, key: str) -> Optional[int]:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if m is None:
        return None
    return text.count("\n", 0, m.start()) + 1


def _fail(text: str, key: Optional[str], msg: str, path) -> ValidationError:
    line = _key_line(text, key) if key else None
    where = f"{path}:{line}" if line else str(path)
    return ValidationError(f"{where}: {msg}")


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _number_list(v) -> bool:
    return isinstance(v, list) and all(_is_number(e) for e in v)


def parse_problem(text: str, path="<string>") -> ProblemSpec:
    """Parse and validate a problem document (see :func:`load_problem`)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be a JSON object")

    unknown = sorted(set(doc) - PROBLEM_FIELDS)
    if unknown:
        raise _fail(text, unknown[0], f"unknown field(s): {', '.join(unknown)}", path)
    for key in ("A", "x0", "p", "q", "t0", "T"):
        if key not in doc:
            raise _fail(text, None, f"missing required field {key!r}", path)
    if ("steps" in doc) == ("grid" in doc):
        raise _fail(text, "grid" if "grid" in doc else None,
                    "exactly one of 'steps' or 'grid' is required", path)

    A = doc["A"]
    if not (isinstance(A, list) and A and all(_number_list(r) for r in A)):
        raise _fail(text, "A", "A must be a nonempty array of numeric rows", path)
    n = len(A)
    if any(len(r) != n for r in A):
        raise _fail(text, "A", f"A must be square; got {n} rows of lengths {[len(r) for r in A]}", path)
    if not _number_list(doc["x0"]) or len(doc["x0"]) != n:
        raise _fail(text, "x0", f"x0 must be a numeric array of length {n}", path)
    for key in ("p", "q"):
        v = doc[key]
        if not (isinstance(v, int) and not isinstance(v, bool)) or v < 0:
            raise _fail(text, key,
                        f"{key} must be an integer >= 0 so that 2{key}+1 is odd; got {v!r}", path)
    for key in ("t0", "T"):
        if not _is_number(doc[key]):
            raise _fail(text, key, f"{key} must be a number", path)
    t0, T = float(doc["t0"]), float(doc["T"])
    if not t0 > 0:
        raise _fail(text, "t0", f"t0 must be > 0 (the exact transition is singular at t=0); got {t0}", path)
    if not T > t0:
        raise _fail(text, "T", f"T must exceed t0; got T={T}, t0={t0}", path)

    if "steps" in doc:
        steps = doc["steps"]
        if not (isinstance(steps, int) and not isinstance(steps, bool)) or steps < 1:
            raise _fail(text, "steps", f"steps must be a positive integer; got {steps!r}", path)
        grid = np.linspace(t0, T, steps + 1)
    else:
        g = doc["grid"]
        if not _number_list(g) or len(g) < 2:
            raise _fail(text, "grid", "grid must be an array of at least two times", path)
        grid = np.array(g, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise _fail(text, "grid", "grid times must be strictly increasing", path)
        if grid[0] != t0 or grid[-1] != T:
            raise _fail(text, "grid", "grid must start at t0 and end at T", path)

    forcing = None
    if "forcing" in doc:
        f = doc["forcing"]
        if not (isinstance(f, list) and all(_number_list(r) and len(r) == n for r in f)):
            raise _fail(text, "forcing", f"forcing must be an array of length-{n} vectors", path)
        if len(f) != grid.size - 1:
            raise _fail(text, "forcing",
                        f"forcing has {len(f)} values but the grid has {grid.size - 1} intervals", path)
        forcing = PiecewiseConstantSignal(f)

    try:
        order = FracOrder(doc["p"], doc["q"])
        return ProblemSpec(A, doc["x0"], order, t0, T, grid, forcing)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def load_problem(path) -> ProblemSpec:
    """Read a JSON problem file.

    Fields: ``A`` (row-major), ``x0``, ``p``, ``q``, ``t0 > 0``, ``T``, one of
    ``steps`` (uniform grid) or ``grid``, and optional ``forcing`` (one vector
    per interval). Unknown fields are rejected.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    return parse_problem(text, path)


def example1_problem() -> ProblemSpec:
    text = resources.files("fracdisc").joinpath("examples/example1.json").read_text(encoding="utf-8")
    return parse_problem(text, "example1.json")


# -- report ------------------------------------------------------------------


def encode(m):
    """JSON-native encoding of a vector or matrix; complex as ``{"re", "im"}``."""
    if m is None:
        return None
    m = real_if_effectively_real(np.asarray(m))
    if np.iscomplexobj(m):
        return {"re": m.real.tolist(), "im": m.imag.tolist()}
    return np.asarray(m, dtype=float).tolist()


def decode(v):
    if v is None:
        return None
    if isinstance(v, dict):
        return np.array(v["re"]) + 1j * np.array(v["im"])
    return np.array(v, dtype=float)


@dataclass
class ComparisonReport:
    """Side-by-side result of two discretization methods on one problem.

    All fields are JSON-native; matrices use :func:`encode`. ``None`` marks a
    quantity that could not be computed, with the reason in ``failures``.
    """

    methods: list
    metadata: dict
    times: list
    intervals: list
    transitions_x: list
    transitions_y: list
    transition_diff: list
    transition_diff_frobenius: list
    crosscheck_method: Optional[str] = None
    transitions_crosscheck: list = field(default_factory=list)
    crosscheck_max_abs: list = field(default_factory=list)
    trajectory_x: Optional[list] = None
    trajectory_y: Optional[list] = None
    trajectory_diff_euclidean: Optional[list] = None
    trajectory_diff_max: Optional[float] = None
    trajectory_diff_sum: Optional[float] = None
    trajectory_diff_total: Optional[float] = None
    product_check: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    deviation: Optional[list] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonReport":
        return cls(**d)


def load_report(path) -> ComparisonReport:
    return ComparisonReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _gl_side(problem: ProblemSpec, failures: list):
    k = problem.steps
    mats = [None] * k
    traj = None
    try:
        if not problem.is_uniform():
            raise NonUniformGrid("GL recursion requires a uniform grid")
        delta = (problem.T - problem.t0) / k
        seq = gl.gl_transition_sequence(problem.A, float(problem.order.alpha), delta, k)
    except FracDiscError as exc:
        failures.append(f"gl: {type(exc).__name__}: {exc}")
        return mats, traj
    for i in range(k):
        try:
            mats[i] = gl.gl_pair_transition(seq, i + 1, i)
        except FracDiscError as exc:
            failures.append(f"gl interval {i}: {type(exc).__name__}: {exc}")
    try:
        traj = gl.gl_trajectory(problem).states
    except FracDiscError as exc:
        failures.append(f"gl trajectory: {type(exc).__name__}: {exc}")
    return mats, traj


def _exact_side(problem: ProblemSpec, method: str, ctrl: SeriesControl, failures: list,
                workers: int, label: str):
    k = problem.steps
    try:
        tr = exact.propagate(problem, method, ctrl, workers=workers)
        return list(tr.transitions), tr.states, tr.diagnostics.get("product_check", {})
    except FracDiscError as exc:
        failures.append(f"{label} trajectory: {type(exc).__name__}: {exc}")
    mats = [None] * k
    for i, (lo, hi) in enumerate(problem.intervals()):
        try:
            mats[i] = exact.FUNDAMENTAL[method](problem.A, problem.order, lo, hi, ctrl)
        except FracDiscError as exc:
            failures.append(f"{label} interval {i}: {type(exc).__name__}: {exc}")
    return mats, None, {}


def _side(problem, method, ctrl, failures, workers):
    if method == "gl":
        mats, traj = _gl_side(problem, failures)
        return mats, traj, {}
    if method in EXACT_METHODS:
        return _exact_side(problem, EXACT_METHODS[method], ctrl, failures, workers, method)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _norm_or_none(m):
    return None if m is None else float(np.linalg.norm(m))


def _json_diag(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        out[k] = encode(v) if isinstance(v, np.ndarray) else v
    return out


def compare_methods(problem: ProblemSpec, ctrl: Optional[SeriesControl] = None,
                    methods=("gl", "exact-series"), crosscheck: bool = True,
                    workers: int = 1) -> ComparisonReport:
    """Run two methods on ``problem`` and collect all differences.

    ``methods[0]`` produces the ``x`` side and ``methods[1]`` the ``y`` side.
    When ``y`` is the series form, the quadrature form is computed as a
    cross-check. Failures on one interval or method are recorded and the
    remaining quantities are still reported.
    """
    ctrl = ctrl or SeriesControl()
    mx, my = methods
    failures: list = []
    tx, sx, _ = _side(problem, mx, ctrl, failures, workers)
    ty, sy, prod = _side(problem, my, ctrl, failures, workers)

    diffs = [None if (a is None or b is None) else np.asarray(b) - np.asarray(a) for a, b in zip(tx, ty)]

    check_method, tc, check_err = None, [], []
    if crosscheck and my == "exact-series":
        check_method = "exact-quad"
        tc, _, _ = _exact_side(problem, "quadrature", ctrl, failures, workers, check_method)
        check_err = [
            None if (a is None or b is None) else float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            for a, b in zip(ty, tc)
        ]

    traj_diff = dmax = dsum = dtot = None
    if sx is not None and sy is not None:
        d = np.asarray(sy) - np.asarray(sx)
        per_node = np.linalg.norm(d, axis=1)
        traj_diff = per_node.tolist()
        dmax = float(per_node.max())
        dsum = float(per_node.sum())
        dtot = float(np.linalg.norm(d))

    meta = {
        "p": problem.order.p,
        "q": problem.order.q,
        "alpha": str(problem.order.alpha),
        "n": problem.n,
        "A": encode(problem.A),
        "x0": encode(problem.x0),
        "t0": problem.t0,
        "T": problem.T,
        "grid": problem.grid.tolist(),
        "forcing": None if problem.forcing is None else problem.forcing.values.tolist(),
        "control": ctrl.as_dict(),
    }
    return ComparisonReport(
        methods=[mx, my],
        metadata=meta,
        times=problem.grid.tolist(),
        intervals=[list(iv) for iv in problem.intervals()],
        transitions_x=[encode(m) for m in tx],
        transitions_y=[encode(m) for m in ty],
        transition_diff=[encode(m) for m in diffs],
        transition_diff_frobenius=[_norm_or_none(m) for m in diffs],
        crosscheck_method=check_method,
        transitions_crosscheck=[encode(m) for m in tc],
        crosscheck_max_abs=check_err,
        trajectory_x=encode(sx),
        trajectory_y=encode(sy),
        trajectory_diff_euclidean=traj_diff,
        trajectory_diff_max=dmax,
        trajectory_diff_sum=dsum,
        trajectory_diff_total=dtot,
        product_check=_json_diag(prod),
        failures=failures,
    )


# -- Example 1 ---------------------------------------------------------------

# Published values for the rotation example (alpha = 1/3, step 0.2 on [0.01, 1.01]).
PUBLISHED_GL = [
    [[3.333333333333333e-1, 9.181368809065e-1], [-2.514702143092399e-1, 3.333333333333333e-1]],
    [[-8.661856002099e-3, 6.120376e-1], [-1.6764680953933e-1, -8.6618529e-3]],
    [[-5.804457201e-2, 2.98092855e-1], [-8.16452e-2, -5.8044572e-2]],
    [[-3.354369883e-2, 1.70756678946e-1], [-4.67688637e-2, -3.354369886e-2]],
    [[-1.72097833e-2, 1.3480937e-1], [-3.6923205e-2, -1.72093e-2]],
]
PUBLISHED_EXACT = [
    [[8.253515142e-2, 6.623231589e-2], [6.6232315e-2, 8.2535151422e-2]],
    [[4.014333789e-1, 3.91934853e-2], [-3.91934853771e-2, 4.014333789e-1]],
    [[3.9781124825e-1, 5.4958790553e-2], [-5.495879055e-2, 3.9781124811e-1]],
    [[3.957906410e-1, 9.46203741871e-2], [-9.46203741873e-2, 3.9579064106e-1]],
    [[4.0040509424e-1, 1.3019825994e-1], [-1.3019825995e-1, 4.0040509421e-1]],
]
PUBLISHED_X = [[1, 2], [2.69, 0.41], [1.21, -0.018], [0.53, -0.019], [0.30, -0.011], [0.25, -0.0071]]
PUBLISHED_Y = [[1, 2], [0.21, 0.098], [0.091, 0.031], [0.037, 0.0079], [0.01, -0.0005], [0.006, -0.0022]]
PUBLISHED_TRAJECTORY_NORM = 2.34

PRINT_DECIMALS = 4


def _r4(v):
    return None if v is None else round(float(v), PRINT_DECIMALS)


def deviation_table(report: ComparisonReport) -> list:
    """Rows comparing the report with the published example values, rounded to 1e-4."""
    rows = []

    def add(quantity, t_lo, t_hi, entry, published, computed):
        dev = None if computed is None else abs(computed - published)
        rows.append({
            "quantity": quantity,
            "t_lo": _r4(t_lo),
            "t_hi": _r4(t_hi),
            "entry": entry,
            "published": _r4(published),
            "computed": _r4(computed),
            "abs_deviation": _r4(dev),
        })

    for quantity, published, mats in (
        ("gl_transition", PUBLISHED_GL, report.transitions_x),
        ("exact_transition", PUBLISHED_EXACT, report.transitions_y),
    ):
        for (lo, hi), pub, m in zip(report.intervals, published, mats):
            for i in range(2):
                for j in range(2):
                    c = None if m is None or isinstance(m, dict) else m[i][j]
                    add(quantity, lo, hi, f"{i + 1}{j + 1}", pub[i][j], c)
    for quantity, published, states in (
        ("gl_state", PUBLISHED_X, report.trajectory_x),
        ("exact_state", PUBLISHED_Y, report.trajectory_y),
    ):
        for k, (t, pub) in enumerate(zip(report.times, published)):
            for i in range(2):
                c = None if states is None or isinstance(states, dict) else states[k][i]
                add(quantity, t, t, f"{i + 1}", pub[i], c)
    for name, value in (
        ("trajectory_norm_total", report.trajectory_diff_total),
        ("trajectory_norm_max", report.trajectory_diff_max),
        ("trajectory_norm_sum", report.trajectory_diff_sum),
        ("trajectory_norm_final", None if report.trajectory_diff_euclidean is None
         else report.trajectory_diff_euclidean[-1]),
    ):
        add(name, report.times[0], report.times[-1], "", PUBLISHED_TRAJECTORY_NORM, value)
    return rows


def run_example1(ctrl: Optional[SeriesControl] = None, out=None, fmt: str = "csv") -> ComparisonReport:
    """Rotation example: GL versus exact transitions, trajectories from (1, 2)."""
    report = compare_methods(example1_problem(), ctrl)
    report.deviation = deviation_table(report)
    if out is not None:
        emit(report, fmt, out)
    return report


# -- output ------------------------------------------------------------------


def fmt_number(v) -> str:
    """Positional decimal with 15 significant digits."""
    if v is None:
        return ""
    return np.format_float_positional(float(v), precision=15, unique=False, fractional=False, trim="-")


def _fmt_entry(v) -> str:
    if isinstance(v, complex):
        return f"{fmt_number(v.real)}{'+' if v.imag >= 0 else '-'}{fmt_number(abs(v.imag))}j"
    return fmt_number(v)


def _flat(m, n):
    if m is None:
        return [""] * (n * n)
    arr = decode(m)
    return [_fmt_entry(complex(v)) if np.iscomplexobj(arr) else fmt_number(v) for v in arr.reshape(-1)]


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _label(method: str) -> str:
    return "gl" if method == "gl" else "exact"


def _vec_cells(states, k, n):
    if states is None:
        return [""] * n
    arr = decode(states)
    return format_vector(arr[k])


def format_vector(v):
    if np.iscomplexobj(v):
        return [_fmt_entry(complex(e)) for e in v]
    return [fmt_number(e) for e in v]


def write_transitions_csv(path: Path, intervals, mats, n: int) -> None:
    header = ["t_lo", "t_hi"] + [f"phi_{i + 1}{j + 1}" for i in range(n) for j in range(n)]
    rows = [[fmt_number(lo), fmt_number(hi)] + _flat(m, n) for (lo, hi), m in zip(intervals, mats)]
    write_csv(path, header, rows)


def emit(report: ComparisonReport, format: str, path) -> list:
    """Write ``report`` under directory ``path``; returns the files written.

    ``csv`` writes one table per file (``trajectories.csv``,
    ``transitions_<method>.csv``, ``norms.csv`` and, when present,
    ``deviation.csv``); ``json`` writes ``report.json``.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    if format == "json":
        target = out / "report.json"
        target.write_text(report.to_json(), encoding="utf-8")
        return [target]
    if format != "csv":
        raise ValueError(f"unknown format {format!r}")

    n = report.metadata["n"]
    written = []
    mx, my = report.methods
    lx, ly = _label(mx), _label(my)
    if lx == ly:
        lx, ly = lx + "_x", ly + "_y"

    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"y_{i + 1}" for i in range(n)] + ["diff_euclidean"]
    rows = []
    if report.trajectory_x is not None or report.trajectory_y is not None:
        for k, t in enumerate(report.times):
            d = "" if report.trajectory_diff_euclidean is None else fmt_number(report.trajectory_diff_euclidean[k])
            rows.append([fmt_number(t)] + _vec_cells(report.trajectory_x, k, n)
                        + _vec_cells(report.trajectory_y, k, n) + [d])
    p = out / "trajectories.csv"
    write_csv(p, header, rows)
    written.append(p)

    for label, mats in ((lx, report.transitions_x), (ly, report.transitions_y)):
        p = out / f"transitions_{label}.csv"
        write_transitions_csv(p, report.intervals, mats, n)
        written.append(p)
    if report.crosscheck_method:
        p = out / "transitions_exact_quad.csv"
        write_transitions_csv(p, report.intervals, report.transitions_crosscheck, n)
        written.append(p)

    rows = []
    for k, (lo, hi) in enumerate(report.intervals):
        rows.append([fmt_number(lo), fmt_number(hi), "transition_diff_frobenius",
                     fmt_number(report.transition_diff_frobenius[k])])
        if report.crosscheck_max_abs:
            rows.append([fmt_number(lo), fmt_number(hi), "series_vs_quadrature_max_abs",
                         fmt_number(report.crosscheck_max_abs[k])])
    if report.times:
        t0, T = fmt_number(report.times[0]), fmt_number(report.times[-1])
        for name in ("trajectory_diff_max", "trajectory_diff_sum", "trajectory_diff_total"):
            rows.append([t0, T, name, fmt_number(getattr(report, name))])
        if report.trajectory_diff_euclidean is not None:
            rows.append([t0, T, "trajectory_diff_final", fmt_number(report.trajectory_diff_euclidean[-1])])
        disc = report.product_check.get("discrepancy_euclidean") if report.product_check else None
        if disc is not None:
            rows.append([t0, T, "stepwise_vs_one_shot_euclidean", fmt_number(disc)])
    p = out / "norms.csv"
    write_csv(p, ["t_lo", "t_hi", "quantity", "value"], rows)
    written.append(p)

    if report.deviation is not None:
        p = out / "deviation.csv"
        cols = ["t_lo", "t_hi", "quantity", "entry", "published", "computed", "abs_deviation"]

        def f4(v):
            return "" if v is None else f"{v:.{PRINT_DECIMALS}f}"

        write_csv(p, cols, [
            [f4(r["t_lo"]), f4(r["t_hi"]), r["quantity"], r["entry"], f4(r["published"]),
             f4(r["computed"]), f4(r["abs_deviation"])]
            for r in report.deviation
        ])
        written.append(p)
    if report.failures:
        log.warning("%d failure(s) recorded in the report", len(report.failures))
    return written
