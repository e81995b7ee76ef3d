"""Command-line front end.

Every command prints JSON on standard output (floats with 17 significant
digits) and writes CSV files only where ``--out`` asks for them.  Exit codes:
0 success, 1 invalid input, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class InputError(Exception):
    """Bad flag or input file; the message names the culprit."""


class NumericalError(Exception):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# -- formatting --------------------------------------------------------------


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def to_json_text(obj: Any) -> str:
    """JSON with fixed 17-digit floats; non-finite floats become ``null``."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int) and not isinstance(obj, bool):
        return str(obj)
    if isinstance(obj, float) or type(obj).__module__ == "numpy" and hasattr(obj, "dtype"):
        if hasattr(obj, "dtype") and obj.dtype.kind in "iub":
            return json.dumps(obj.item())
        x = float(obj)
        return fmt_float(x) if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json_text(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json_text(v) for v in obj) + "]"
    if hasattr(obj, "tolist"):
        return to_json_text(obj.tolist())
    if hasattr(obj, "to_json"):
        return to_json_text(obj.to_json())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def emit(obj: Any, stream=None) -> None:
    (stream or sys.stdout).write(to_json_text(obj) + "\n")


def write_rows(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])


# -- validation helpers ------------------------------------------------------


def _positive(name: str, value):
    if value is None or not (value > 0) or not math.isfinite(value):
        raise InputError(f"--{name} must be a positive finite number, got {value}")
    return value


def _load_step_function(path: str):
    from .stepfn import StepFunction, ValidationError

    p = Path(path)
    if not p.is_file():
        raise InputError(f"file not found: {path}")
    try:
        obj = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    try:
        return StepFunction.from_json(obj)
    except ValidationError as exc:
        raise InputError(f"{path}: {exc}") from None


def _comb(args):
    from .geometry import CombDomain

    return CombDomain(_positive("lambda", args.lam), _positive("epsilon", args.eps))


def _evaluator(args):
    from .bellman import BellmanEvaluator, mu_critical

    d = _comb(args)
    mu = _positive("mu", args.mu)
    mstar = mu_critical(d.lam, d.epsilon)
    if mu >= mstar:
        raise InputError(f"--mu must be below the critical exponent {fmt_float(mstar)}, got {mu}")
    return BellmanEvaluator(d, mu)


# -- commands ----------------------------------------------------------------


def cmd_norms(args):
    from .geometry import CombDomain
    from .oscillation import membership_A, norms

    lam = _positive("lambda", args.lam)
    if args.dyadic_depth < 0:
        raise InputError("--dyadic-depth must be non-negative")
    if args.k_max < 1:
        raise InputError("--k-max must be at least 1")
    if args.eps is not None:
        _positive("epsilon", args.eps)
    f = _load_step_function(args.file)
    if not f.is_real:
        raise InputError(f"{args.file}: pieces must carry scalar values")
    out = norms(f, lam, args.dyadic_depth, args.k_max).to_json()
    if args.eps is not None:
        m = membership_A(f, CombDomain(lam, args.eps), strict=True, k_max=args.k_max)
        out["member"] = m.member
        out["witness"] = list(m.witness) if m.witness else None
        out["mean"] = list(m.mean_point)
        out["mean_region"] = m.mean_region
    emit(out)


def cmd_bellman_eval(args):
    from .bellman import DomainError

    ev = _evaluator(args)
    try:
        val, seg = ev.evaluate((args.x1, args.x2), with_segment=True)
    except DomainError as exc:
        raise InputError(f"--x1/--x2: {exc}") from None
    emit({"value": val, "segment": seg.to_json(), "region": str(ev.domain.classify((args.x1, args.x2)))})


def cmd_mu_crit(args):
    from .bellman import mu_critical

    d = _comb(args)
    sys.stdout.write(fmt_float(mu_critical(d.lam, d.epsilon)) + "\n")


def _sweep_value(report: str, lam: float, eps: float, mu: float) -> float:
    from .bellman import BellmanEvaluator, mu_critical
    from .extremal import ExtremalSpec, sharpness
    from .geometry import CombDomain

    if report == "mu-crit":
        return mu_critical(lam, eps)
    if report == "vertex0":
        if mu >= mu_critical(lam, eps):
            return math.inf
        return BellmanEvaluator(CombDomain(lam, eps), mu).vertex_value(0)
    return sharpness(ExtremalSpec(lam, eps), mu).diff


def cmd_sweep(args):
    base = {"lambda": args.lam, "epsilon": args.eps, "mu": args.mu}
    for k, v in base.items():
        _positive(k, v)
    if not args.values:
        raise InputError("--values needs at least one number")
    for v in args.values:
        _positive(args.param, v)
    rows = []
    for v in args.values:
        p = dict(base, **{args.param: v})
        rows.append((float(v), float(_sweep_value(args.report, p["lambda"], p["epsilon"], p["mu"]))))
    header = (args.param, args.report)
    if args.out:
        write_rows(args.out, header, rows)
        emit({"rows": len(rows), "out": args.out})
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(x) for x in row])


def cmd_extremal(args):
    from .extremal import ExtremalSpec, build, verify_trajectory

    lam, eps = _positive("lambda", args.lam), _positive("epsilon", args.eps)
    if args.pieces is not None and args.pieces < 1:
        raise InputError("--pieces must be at least 1")
    spec = ExtremalSpec(lam, eps, args.pieces)
    phi = build(spec)
    if args.out:
        Path(args.out).write_text(to_json_text(phi.to_json()) + "\n")
    rep = verify_trajectory(spec)
    emit({"lambda": lam, "epsilon": eps, "n_pieces": spec.n_pieces, "a": spec.a, "s": spec.s,
          "tail_mass": spec.tail_mass, "out": args.out, "trajectory": rep.to_json()})


def cmd_sharpness(args):
    from .extremal import ExtremalSpec, sharpness

    lam, eps = _positive("lambda", args.lam), _positive("epsilon", args.eps)
    if args.mu is None or args.mu < 0 or not math.isfinite(args.mu):
        raise InputError(f"--mu must be a non-negative finite number, got {args.mu}")
    if args.pieces is not None and args.pieces < 1:
        raise InputError("--pieces must be at least 1")
    emit(sharpness(ExtremalSpec(lam, eps, args.pieces), args.mu).to_json())


def cmd_induct(args):
    from .splitting import verify_main_inequality

    ev = _evaluator(args)
    if args.max_depth < 0:
        raise InputError("--max-depth must be non-negative")
    _positive("mass-tol", args.mass_tol)
    f = _load_step_function(args.file)
    if not f.is_real:
        raise InputError(f"{args.file}: pieces must carry scalar values")
    rep = verify_main_inequality(f, ev.domain, ev, args.max_depth, args.mass_tol)
    if args.out and rep.trace is not None:
        write_rows(args.out, ("generation", "a", "b", "x1", "x2", "B_k"),
                   ((k, float(a), float(b), float(x1), float(x2), float(B))
                    for k, a, b, x1, x2, B in rep.trace.rows()))
    if rep.verdict == "FAIL" and rep.reason.startswith("split failed"):
        raise NumericalError(rep.reason, rep.to_json())
    emit(rep.to_json())


def cmd_mlcf(args):
    from .geometry import TwoDiskDomain
    from .mlcf import ConvergenceError, comb_solver_domain, compare_closed_form, solve, two_disk_solver_domain

    grid = args.grid
    if grid is None or grid < 2:
        raise InputError(f"--grid must be an integer >= 2, got {grid}")
    _positive("tol", args.tol)
    if args.max_iters < 1:
        raise InputError("--max-iters must be at least 1")
    ev = None
    if args.domain == "comb":
        ev = _evaluator(args)
        if args.cells < 1:
            raise InputError("--cells must be at least 1")
        dom = comb_solver_domain(ev.domain, ev, cells=args.cells, edge=args.edge)
    else:
        dom = two_disk_solver_domain(TwoDiskDomain())
    try:
        field_ = solve(dom, grid, args.tol, args.max_iters)
    except ConvergenceError as exc:
        raise NumericalError(str(exc), {"residual": exc.residual, "iterations": exc.iterations}) from None
    if args.out:
        field_.write_csv(args.out)
    out = {"domain": args.domain, "grid": grid, "iterations": field_.iterations,
           "residual": field_.residual, "out": args.out}
    if ev is not None:
        out["edge"] = args.edge
        out["closed_form_comparison"] = compare_closed_form(field_, ev, band=args.band).to_json()
    else:
        out["value_at_mean"] = field_.query((0.0, -0.8))
    emit(out)


def cmd_counterexample(args):
    from .mlcf import ConvergenceError, counterexample_report

    if args.grid < 2:
        raise InputError(f"--grid must be an integer >= 2, got {args.grid}")
    _positive("tol", args.tol)
    try:
        rep = counterexample_report(args.grid, args.tol, args.max_iters)
    except ConvergenceError as exc:
        raise NumericalError(str(exc), {"residual": exc.residual, "iterations": exc.iterations}) from None
    emit(rep.to_json())


def cmd_axioms(args):
    from .geometry import TwoDiskDomain, check_axioms

    d = _comb(args) if args.domain == "comb" else TwoDiskDomain()
    rep = check_axioms(d)
    out = rep.to_json()
    out["domain"] = d.to_json()
    emit(out)


# -- parser ------------------------------------------------------------------


def _add_comb(p, mu: bool = False, defaults: bool = True):
    p.add_argument("--lambda", dest="lam", type=float, default=1.0 if defaults else None,
                   help="lattice step of the comb")
    p.add_argument("--epsilon", dest="eps", type=float, default=1.0 if defaults else None,
                   help="oscillation bound (ray tips at height eps^2)")
    if mu:
        p.add_argument("--mu", type=float, default=0.5, help="exponent of the boundary data exp(mu t)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="weakbmo", description="Weak BMO norms, the comb Bellman function and its checks.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("norms", help="BMO, dyadic and weak BMO norms of a step function")
    p.add_argument("file")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--epsilon", dest="eps", type=float, default=None,
                   help="also report class membership for this epsilon")
    p.add_argument("--dyadic-depth", type=int, default=12)
    p.add_argument("--k-max", type=int, default=16)
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("bellman", help="closed-form Bellman function")
    bsub = p.add_subparsers(dest="bellman_command", required=True, parser_class=_Parser)
    for parent, name in ((bsub, "eval"), (sub, "bellman-eval")):
        q = parent.add_parser(name, help="evaluate at a point")
        _add_comb(q, mu=True)
        q.add_argument("--x1", type=float, required=True)
        q.add_argument("--x2", type=float, required=True)
        q.set_defaults(func=cmd_bellman_eval)

    p = sub.add_parser("mu-crit", help="critical exponent")
    _add_comb(p)
    p.set_defaults(func=cmd_mu_crit)

    p = sub.add_parser("sweep", help="CSV sweep of one parameter")
    p.add_argument("--param", choices=("lambda", "epsilon", "mu"), required=True)
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.add_argument("--report", choices=("vertex0", "mu-crit", "sharpness"), default="vertex0")
    _add_comb(p, mu=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("extremal", help="build and check the extremal function")
    _add_comb(p)
    p.add_argument("--pieces", type=int, default=None)
    p.add_argument("--out", help="write the step function as JSON")
    p.set_defaults(func=cmd_extremal)

    p = sub.add_parser("sharpness", help="extremal exponential average against the closed form")
    _add_comb(p, mu=True)
    p.add_argument("--pieces", type=int, default=None)
    p.set_defaults(func=cmd_sharpness)

    p = sub.add_parser("induct", help="Bellman induction on a step function")
    p.add_argument("file")
    _add_comb(p, mu=True)
    p.add_argument("--max-depth", type=int, default=200)
    p.add_argument("--mass-tol", type=float, default=1e-12)
    p.add_argument("--out", help="trace CSV")
    p.set_defaults(func=cmd_induct)

    p = sub.add_parser("mlcf", help="grid minimal locally concave function")
    p.add_argument("--domain", choices=("comb", "two-disk"), required=True)
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iters", type=int, default=5000)
    _add_comb(p, mu=True)
    p.add_argument("--edge", choices=("closed-form", "constant"), default="constant")
    p.add_argument("--cells", type=int, default=1, help="half-width of the comb window in lattice steps")
    p.add_argument("--band", type=float, default=0.0,
                   help="width next to the window sides left out of the closed-form comparison")
    p.add_argument("--out", help="field CSV")
    p.set_defaults(func=cmd_mlcf)

    p = sub.add_parser("counterexample", help="two-disk counterexample")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iters", type=int, default=5000)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("axioms", help="check the five domain axioms")
    p.add_argument("--domain", choices=("comb", "two-disk"), default="comb")
    _add_comb(p)
    p.set_defaults(func=cmd_axioms)
    return ap


def run(argv: Sequence[str] | None = None) -> int:
    from .splitting import SplitError
    from .stepfn import ValidationError

    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        emit({"error": str(exc), **exc.diagnostics})
        return EXIT_NUMERICAL
    except SplitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        emit({"error": str(exc), "diagnostics": {k: str(v) for k, v in exc.diagnostics.items()}})
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
