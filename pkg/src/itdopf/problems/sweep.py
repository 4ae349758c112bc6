"""Scalability sweep: attach 0..k clones of a feeder and re-solve."""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..errors import ItdError
from ..formulations.common import Formulation
from ..io import jsonfmt
from ..nlp import SolverOptions
from .case import ITDCase, attach_feeders
from .opfitd import solve_opfitd

log = logging.getLogger(__name__)


@dataclass
class SweepRow:
    k: int
    nodes: int
    expected_nodes: int
    status: str
    objective: float
    time_s: float
    wall_s: float
    iterations: int
    message: str = ""

    @property
    def optimal(self):
        return self.status == "Optimal"


@dataclass
class SweepReport:
    formulation: Formulation
    base_nodes: int
    feeder_nodes: int
    rows: list

    @property
    def all_optimal(self):
        return all(r.optimal for r in self.rows)

    @property
    def nodes_additive(self):
        return all(r.nodes == r.expected_nodes for r in self.rows)

    @property
    def total_wall_s(self):
        return sum(r.wall_s for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["formulation", "mode", "cost_usd_per_hr", "time_s", "iterations",
                    "k", "nodes", "status"])
        for r in self.rows:
            w.writerow([self.formulation.value, "itd", repr(float(r.objective)), repr(float(r.time_s)),
                        r.iterations, r.k, r.nodes, r.status])
        return buf.getvalue()

    def to_document(self) -> dict:
        return {
            "formulation": self.formulation.value,
            "base_nodes": self.base_nodes,
            "feeder_nodes": self.feeder_nodes,
            "rows": [
                {"k": r.k, "nodes": r.nodes, "expected_nodes": r.expected_nodes, "status": r.status,
                 "cost_usd_per_hr": r.objective, "time_s": r.time_s, "wall_s": r.wall_s,
                 "iterations": r.iterations, "message": r.message}
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return jsonfmt.dumps(self.to_document())

    def lines(self):
        out = [f"{'k':>3s} {'nodes':>6s} {'status':<16s} {'cost $/hr':>14s} {'time s':>8s} {'iter':>5s}"]
        for r in self.rows:
            out.append(f"{r.k:3d} {r.nodes:6d} {r.status:<16s} {r.objective:14.4f} {r.time_s:8.3f} {r.iterations:5d}")
        return out


def scale_sweep(transmission, feeder_template, attach_buses, k_range, formulation,
                opts: SolverOptions | None = None, parallel=False) -> SweepReport:
    """Solve the ITD OPF with ``k`` feeder clones for each ``k`` in ``k_range``.

    Clone ``j`` attaches at ``attach_buses[j - 1]``.  Failures are recorded in
    the row and the sweep moves on; rows are ordered by ``k`` either way.
    """
    form = Formulation.parse(formulation)
    buses = [int(b) for b in attach_buses]
    if len(set(buses)) != len(buses):
        raise ValueError("attach_buses must be distinct")
    ks = sorted(set(int(k) for k in k_range))
    if ks and (ks[0] < 0 or ks[-1] > len(buses)):
        raise ValueError(f"k must lie in 0..{len(buses)}")
    base = ITDCase.build(transmission).node_count()
    per_feeder = feeder_template.node_count()

    def one(k):
        expected = base + k * per_feeder
        t0 = time.perf_counter()
        try:
            case = attach_feeders(transmission, feeder_template, buses[:k])
            nodes = case.node_count()
            res = solve_opfitd(case, form, opts)
            row = SweepRow(k, nodes, expected, res.status.value, res.objective, res.seconds,
                           time.perf_counter() - t0, res.iterations, res.solution.message)
        except (ItdError, ArithmeticError, ValueError, RuntimeError) as exc:
            row = SweepRow(k, -1, expected, "Failed", float("nan"), 0.0, time.perf_counter() - t0, 0, str(exc))
        log.info("sweep k=%d nodes=%d status=%s time=%.3fs", k, row.nodes, row.status, row.time_s)
        return row

    if parallel and len(ks) > 1:
        with ThreadPoolExecutor() as pool:
            rows = list(pool.map(one, ks))
    else:
        rows = [one(k) for k in ks]
    return SweepReport(form, base, per_feeder, rows)
