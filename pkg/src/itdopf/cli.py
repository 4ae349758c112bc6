"""Command-line front end.

Exit codes
----------
0  success (Optimal, clean validation, passing check)
1  input error, validation violations, failed derivative check or sweep row
2  Infeasible
3  solver failure (iteration limit, numerical failure, failed compare row)

``ITDOPF_LOG`` (debug, info, warning, error) sets the stderr log level; at
``debug`` every solver iteration is logged.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .errors import ItdError
from .formulations.common import Formulation
from .formulations.derivcheck import check_jacobians, random_interior_points
from .io.results import write_result_json
from .network import validate_case
from .nlp import SolverOptions, Status
from .problems.case import BUNDLED, ITDCase, bundled_paths, read_case_files, read_feeder
from .problems.compare import compare
from .problems.independent import solve_independent
from .problems.opfitd import Setpoints, build_opfitd, solve_opfitd, solve_pfitd
from .problems.sweep import scale_sweep

log = logging.getLogger("itdopf")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 1, 2, 3


def status_exit(status: Status) -> int:
    if status is Status.OPTIMAL:
        return EXIT_OK
    if status is Status.INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_SOLVER


def write_atomic(path, text: str):
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out):
    if out:
        write_atomic(out, text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def setup_logging():
    level = os.environ.get("ITDOPF_LOG", "warning").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def solver_options(args) -> SolverOptions:
    kw = {}
    if getattr(args, "tol", None) is not None:
        kw["tol"] = args.tol
    if getattr(args, "max_iter", None) is not None:
        kw["max_iter"] = args.max_iter
    if log.isEnabledFor(logging.DEBUG):
        kw["log"] = logging.getLogger("itdopf.solver").debug
    return SolverOptions(**kw)


def case_inputs(args):
    """(transmission, feeders, spec) from --case or --pm/--pmd/--boundary."""
    if args.case:
        if args.pm or args.pmd or args.boundary:
            raise ItdError("--case cannot be combined with --pm, --pmd or --boundary")
        pm, bnd = bundled_paths(args.case)
        return read_case_files(pm, (), bnd)
    if not args.pm:
        raise ItdError("an input case is required: give --pm (with optional --pmd/--boundary) or --case")
    return read_case_files(args.pm, args.pmd or (), args.boundary)


def load(args) -> ITDCase:
    return ITDCase.build(*case_inputs(args))


def add_case_args(p):
    g = p.add_argument_group("case input")
    g.add_argument("--pm", help="transmission network (MATPOWER .m)")
    g.add_argument("--pmd", action="append", default=[], help="distribution feeder JSON (repeatable, ordered)")
    g.add_argument("--boundary", help="boundary linking JSON")
    g.add_argument("--case", choices=sorted(BUNDLED), help="use a bundled case instead of files")


def add_solver_args(p):
    p.add_argument("--tol", type=float, help="KKT tolerance (default 1e-6)")
    p.add_argument("--max-iter", type=int, help="iteration limit (default 300)")


def formulation_arg(text):
    try:
        return Formulation.parse(text)
    except ItdError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def run_solve(args) -> int:
    case = load(args)
    opts = solver_options(args)
    if args.mode == "independent":
        if args.problem != "opf":
            raise ItdError("--mode independent only applies to the OPF problem")
        res = solve_independent(case, args.formulation, args.reserve, opts, parallel=args.parallel)
        doc = res.to_document()
        doc["case"] = case.name
    elif args.problem == "pf":
        if not args.setpoints:
            raise ItdError("--problem pf needs --setpoints (an OPF result JSON)")
        sp = Setpoints.from_document(json.loads(Path(args.setpoints).read_text()))
        res = solve_pfitd(case, args.formulation, sp, opts)
        doc = res.to_document()
    else:
        res = solve_opfitd(case, args.formulation, opts)
        doc = res.to_document()
    emit(write_result_json(doc), args.out)
    if res.status is not Status.OPTIMAL:
        print(f"itdopf: solve ended with status {res.status.value}", file=sys.stderr)
    return status_exit(res.status)


def _write_pair(out, table):
    stem = Path(out)
    stem = stem.with_suffix("") if stem.suffix in (".csv", ".json") else stem
    write_atomic(stem.with_suffix(".csv"), table.to_csv())
    write_atomic(stem.with_suffix(".json"), table.to_json())


def run_compare(args) -> int:
    case = load(args)
    forms = args.formulations or list(Formulation)
    table = compare(case, forms, solver_options(args), args.reserve, parallel=args.parallel)
    if args.out:
        _write_pair(args.out, table)
    else:
        sys.stdout.write(table.to_csv())
    for line in table.lines():
        print(line, file=sys.stderr)
    return EXIT_OK if table.all_solved else EXIT_SOLVER


def run_validate(args) -> int:
    trans, feeders, spec = case_inputs(args)
    report = validate_case(trans, feeders, spec)
    if report.ok:
        sys.stdout.write("ok: no violations\n")
        return EXIT_OK
    for line in report.lines():
        sys.stdout.write(line + "\n")
    sys.stdout.write(f"{len(report)} violation(s)\n")
    return EXIT_INPUT


def run_check_derivs(args) -> int:
    case = load(args)
    im = build_opfitd(case, args.formulation)
    pts = random_interior_points(im.nlp, args.points, seed=args.seed)
    report = check_jacobians(im.nlp.blocks, pts, step=args.step)
    emit("\n".join(report.lines()) + "\n", args.out)
    return EXIT_OK if report.passed else EXIT_INPUT


def _k_range(text):
    a, sep, b = text.partition("..")
    try:
        return range(int(a), int(b) + 1) if sep else range(int(a), int(a) + 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected K or K0..K1, got {text!r}") from None


def run_sweep(args) -> int:
    pm = bundled_paths(args.case)[0] if args.case else args.pm
    if not pm:
        raise ItdError("sweep needs --pm or --case for the transmission network")
    if len(args.pmd) != 1:
        raise ItdError("sweep needs exactly one --pmd feeder template")
    trans, _, _ = read_case_files(pm)
    template = read_feeder(args.pmd[0])
    buses = [b for b in args.attach.split(",") if b.strip()]
    report = scale_sweep(trans, template, buses, args.k, args.formulation, solver_options(args),
                         parallel=args.parallel)
    if args.out:
        _write_pair(args.out, report)
    else:
        sys.stdout.write(report.to_csv())
    for line in report.lines():
        print(line, file=sys.stderr)
    return EXIT_OK if report.all_optimal and report.nodes_additive else EXIT_INPUT


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="itdopf",
        description="Integrated transmission-distribution optimal power flow.",
        epilog="exit codes: 0 success, 1 input error or failed check, 2 infeasible, 3 solver failure. "
               "Set ITDOPF_LOG=debug|info|warning|error for stderr logging.",
    )
    p.add_argument("--version", action="version", version=f"itdopf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve the joint OPF or power flow")
    add_case_args(s)
    add_solver_args(s)
    s.add_argument("--formulation", type=formulation_arg, default=Formulation.ACP)
    s.add_argument("--problem", choices=("opf", "pf"), default="opf")
    s.add_argument("--setpoints", help="OPF result JSON supplying power-flow setpoints")
    s.add_argument("--mode", choices=("itd", "independent"), default="itd")
    s.add_argument("--reserve", type=float, default=0.10, help="DG reserve fraction in independent mode")
    s.add_argument("--parallel", action="store_true", help="solve independent feeders concurrently")
    s.add_argument("--out", help="result JSON path (default: stdout)")
    s.set_defaults(func=run_solve)

    c = sub.add_parser("compare", help="independent versus coordinated, per formulation")
    add_case_args(c)
    add_solver_args(c)
    c.add_argument("--formulations", type=lambda t: [formulation_arg(x) for x in t.split(",") if x],
                   help="comma-separated list (default: all four)")
    c.add_argument("--reserve", type=float, default=0.10)
    c.add_argument("--parallel", action="store_true")
    c.add_argument("--out", help="output stem; writes STEM.csv and STEM.json (default: CSV to stdout)")
    c.set_defaults(func=run_compare)

    v = sub.add_parser("validate", help="check case invariants")
    add_case_args(v)
    v.set_defaults(func=run_validate)

    d = sub.add_parser("check-derivs", help="finite-difference check of every constraint Jacobian")
    add_case_args(d)
    d.add_argument("--formulation", type=formulation_arg, default=Formulation.ACP)
    d.add_argument("--points", type=int, default=100)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--step", type=float, default=1e-6)
    d.add_argument("--out")
    d.set_defaults(func=run_check_derivs)

    w = sub.add_parser("sweep", help="attach 0..k feeder clones and re-solve")
    add_case_args(w)
    add_solver_args(w)
    w.add_argument("--formulation", type=formulation_arg, default=Formulation.ACP)
    w.add_argument("--attach", required=True, help="comma-separated transmission bus ids")
    w.add_argument("--k", type=_k_range, default=range(1, 2), help="K or K0..K1 (inclusive)")
    w.add_argument("--parallel", action="store_true")
    w.add_argument("--out", help="output stem; writes STEM.csv and STEM.json")
    w.set_defaults(func=run_sweep)
    return p


def main(argv=None) -> int:
    setup_logging()
    args = parser().parse_args(argv)
    try:
        return args.func(args)
    except (ItdError, OSError, ValueError) as exc:
        print(f"itdopf: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
