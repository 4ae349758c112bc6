"""Uncoordinated baseline: feeders dispatch first, transmission serves what remains."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..formulations.builder import add_generator_costs, build_network
from ..formulations.common import Formulation
from ..formulations.netdata import distribution_data
from ..nlp import ModelBuilder, NlpModel, Solution, SolverOptions, Status
from .case import ITDCase
from .opfitd import ITDResult, gen_cost, isolate_feeder, run_solver, solve_opfitd


@dataclass
class FeederSolve:
    name: str
    solution: Solution
    dg_cost: float
    slack_p_mw: float
    slack_q_mvar: float
    dg_kw: dict = field(default_factory=dict)
    model: NlpModel = field(default=None, repr=False)

    @property
    def status(self):
        return self.solution.status


@dataclass
class IndependentResult:
    formulation: Formulation
    reserve_fraction: float
    feeders: list
    transmission: ITDResult
    total_cost: float
    total_runtime: float
    total_iterations: int

    @property
    def status(self) -> Status:
        for f in self.feeders:
            if f.status is not Status.OPTIMAL:
                return f.status
        return self.transmission.status

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL

    @property
    def transmission_cost(self):
        return self.transmission.objective

    def to_document(self) -> dict:
        return {
            "problem": "independent",
            "formulation": self.formulation.value,
            "reserve_fraction": self.reserve_fraction,
            "status": self.status.value,
            "total_cost_usd_per_hr": self.total_cost,
            "total_time_s": self.total_runtime,
            "total_iterations": self.total_iterations,
            "transmission_cost_usd_per_hr": self.transmission_cost,
            "feeders": [
                {
                    "name": f.name,
                    "status": f.status.value,
                    "dg_cost_usd_per_hr": f.dg_cost,
                    "import_p_mw": f.slack_p_mw,
                    "import_q_mvar": f.slack_q_mvar,
                    "dg_kw": f.dg_kw,
                    "iterations": f.solution.iterations,
                    "solve_time_s": f.solution.seconds,
                }
                for f in self.feeders
            ],
            "transmission": self.transmission.to_document(),
        }


def import_price(case: ITDCase) -> float:
    """Marginal price used to value grid imports inside a feeder subproblem."""
    c1 = [g.cost[1] for g in case.transmission.generators if g.in_service]
    return max(c1, default=0.0)


def solve_feeder_alone(feeder, form, reserve_fraction=0.0, price=0.0, opts=None) -> FeederSolve:
    """Feeder OPF with DG active-power upper bounds scaled by ``1 - reserve_fraction``."""
    form = Formulation.parse(form)
    data = distribution_data(feeder)
    keep = 1.0 - float(reserve_fraction)
    for g in data.gens:
        g.pmax = g.pmax * keep
        g.pmin = np.minimum(g.pmin, g.pmax)
    isolate_feeder(data, feeder, slack_price=price)
    mb = ModelBuilder()
    sp = build_network(mb, form, data, f"dist[{feeder.name}]")
    add_generator_costs(mb, sp)
    nlp = mb.build()
    nlp.auto_scale()
    sol = run_solver(nlp, form, opts)
    x = sol.x
    dg_cost, slack_p, slack_q, dg_kw = 0.0, 0.0, 0.0, {}
    for g, (p, q) in zip(data.gens, sp.gen_dispatch(x)):
        if g.is_slack:
            slack_p = float(np.sum(p)) * feeder.base_kva / 1000.0
            slack_q = float(np.sum(q)) * feeder.base_kva / 1000.0
        else:
            dg_cost += gen_cost(g, p)
            dg_kw[g.label] = [float(v * feeder.base_kva) for v in p]
    return FeederSolve(feeder.name, sol, dg_cost, slack_p, slack_q, dg_kw, nlp)


def solve_independent(case: ITDCase, formulation, reserve_fraction=0.10, opts: SolverOptions | None = None,
                      parallel: bool = False) -> IndependentResult:
    """Feeders first (reserve applied to DG), their imports become transmission
    loads, then the transmission OPF.  Costs and solver times are summed."""
    form = Formulation.parse(formulation)
    if not 0.0 <= reserve_fraction <= 1.0:
        raise ValueError("reserve_fraction must lie in [0, 1]")
    price = import_price(case)
    linked = [case.feeders[l.feeder_index] for l in case.links]

    def one(feeder):
        return solve_feeder_alone(feeder, form, reserve_fraction, price, opts)

    if parallel and len(linked) > 1:
        with ThreadPoolExecutor() as pool:
            fres = list(pool.map(one, linked))
    else:
        fres = [one(f) for f in linked]

    trans = case.transmission
    extra = {}
    for link, fr in zip(case.links, fres):
        p, q = extra.get(link.trans_bus, (0.0, 0.0))
        extra[link.trans_bus] = (p + fr.slack_p_mw / trans.base_mva, q + fr.slack_q_mvar / trans.base_mva)
    buses = tuple(
        dataclasses.replace(b, pd=b.pd + extra[b.id][0], qd=b.qd + extra[b.id][1]) if b.id in extra else b
        for b in trans.buses
    )
    tcase = ITDCase.build(dataclasses.replace(trans, buses=buses))
    tres = solve_opfitd(tcase, form, opts)

    total_cost = tres.objective + sum(f.dg_cost for f in fres)
    total_time = tres.seconds + sum(f.solution.seconds for f in fres)
    total_iter = tres.iterations + sum(f.solution.iterations for f in fres)
    return IndependentResult(form, float(reserve_fraction), fres, tres, total_cost, total_time, total_iter)
