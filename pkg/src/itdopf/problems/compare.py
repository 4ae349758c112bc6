"""Independent-versus-ITD comparison across formulations."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

from ..errors import ItdError
from ..formulations.common import Formulation
from ..io import jsonfmt
from ..nlp import SolverOptions
from .case import ITDCase
from .independent import solve_independent
from .opfitd import solve_opfitd

log = logging.getLogger(__name__)

FAILED = "Failed"

CSV_COLUMNS = (
    "formulation", "mode", "cost_usd_per_hr", "time_s", "iterations", "status",
    "independent_cost_usd_per_hr", "independent_time_s", "independent_iterations",
    "independent_status", "difference_usd_per_hr",
)


@dataclass
class RunMetrics:
    status: str
    cost: float
    time_s: float
    iterations: int
    message: str = ""

    @property
    def ok(self):
        return self.status == "Optimal"


@dataclass
class ComparisonRow:
    formulation: Formulation
    itd: RunMetrics
    independent: RunMetrics

    @property
    def difference(self):
        """Independent minus ITD cost; positive when coordination saves money."""
        return self.independent.cost - self.itd.cost

    @property
    def failed(self):
        return not (self.itd.ok and self.independent.ok)


@dataclass
class ComparisonTable:
    case_name: str
    reserve_fraction: float
    rows: list

    @property
    def all_solved(self):
        return all(not r.failed for r in self.rows)

    def row(self, formulation):
        form = Formulation.parse(formulation)
        return next(r for r in self.rows if r.formulation is form)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.formulation.value, "itd", _num(r.itd.cost), _num(r.itd.time_s), r.itd.iterations,
                r.itd.status, _num(r.independent.cost), _num(r.independent.time_s),
                r.independent.iterations, r.independent.status, _num(r.difference),
            ])
        return buf.getvalue()

    def to_document(self) -> dict:
        def m(x: RunMetrics):
            return {"status": x.status, "cost_usd_per_hr": x.cost, "time_s": x.time_s,
                    "iterations": x.iterations, "message": x.message}

        return {
            "case": self.case_name,
            "reserve_fraction": self.reserve_fraction,
            "rows": [
                {"formulation": r.formulation.value, "itd": m(r.itd), "independent": m(r.independent),
                 "difference_usd_per_hr": r.difference, "failed": r.failed}
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return jsonfmt.dumps(self.to_document())

    def lines(self):
        out = [f"{'formulation':<10s} {'ITD $/hr':>14s} {'indep. $/hr':>14s} {'difference':>12s} "
               f"{'ITD s':>8s} {'indep. s':>8s} {'ITD it':>7s} {'ind. it':>7s}"]
        for r in self.rows:
            flag = "  FAILED" if r.failed else ""
            out.append(f"{r.formulation.value:<10s} {r.itd.cost:14.4f} {r.independent.cost:14.4f} "
                       f"{r.difference:12.4f} {r.itd.time_s:8.3f} {r.independent.time_s:8.3f} "
                       f"{r.itd.iterations:7d} {r.independent.iterations:7d}{flag}")
        return out


def _num(x):
    return repr(float(x))


def _guarded(fn):
    try:
        return fn()
    except (ItdError, ArithmeticError, ValueError, RuntimeError) as exc:
        log.error("solve failed: %s", exc)
        return RunMetrics(FAILED, float("nan"), 0.0, 0, str(exc))


def compare(case: ITDCase, formulations=tuple(Formulation), opts: SolverOptions | None = None,
            reserve_fraction=0.10, parallel=False) -> ComparisonTable:
    """Solve each formulation coordinated and independently.

    Independent iteration counts and times are sums over all subproblems.  A
    failing solve marks its row rather than aborting the table.
    """
    rows = []
    for f in formulations:
        form = Formulation.parse(f)

        def itd():
            r = solve_opfitd(case, form, opts)
            return RunMetrics(r.status.value, r.objective, r.seconds, r.iterations, r.solution.message)

        def ind():
            r = solve_independent(case, form, reserve_fraction, opts, parallel=parallel)
            return RunMetrics(r.status.value, r.total_cost, r.total_runtime, r.total_iterations)

        row = ComparisonRow(form, _guarded(itd), _guarded(ind))
        log.info("%s: itd %s %.6f, independent %s %.6f", form.value, row.itd.status, row.itd.cost,
                 row.independent.status, row.independent.cost)
        rows.append(row)
    return ComparisonTable(case.name, float(reserve_fraction), rows)
