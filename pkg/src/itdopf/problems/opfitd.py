"""Integrated transmission-distribution OPF and power-flow problems."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..formulations.boundary import build_boundary
from ..formulations.builder import NetSpace, add_generator_costs, build_network
from ..formulations.common import PHASE_ANGLE, Formulation
from ..formulations.netdata import GenData, NetData, distribution_data, transmission_data
from ..nlp import ModelBuilder, NlpModel, Solution, SolverOptions, Status, kkt_residuals, solve, solve_linear
from .case import ITDCase


@dataclass
class ItdModel:
    """An assembled NLP plus the variable maps needed to decode its solutions."""

    nlp: NlpModel
    form: Formulation
    case: ITDCase
    trans: NetSpace
    feeders: list  # NetSpace per feeder, same order as case.feeders
    link_blocks: list  # boundary block names, same order as case.links
    kind: str = "opfitd"

    @property
    def n(self):
        return self.nlp.n

    @property
    def m(self):
        return self.nlp.m


def _feeder_source_nodes(data: NetData, feeder):
    index = data.node_index()
    return np.array([index[f"{feeder.source_bus}.{ph}"] for ph in "abc"], np.int64)


def isolate_feeder(data: NetData, feeder, *, slack_price=0.0, priced=True):
    """Pin the source-bus voltage and add a free three-phase slack generator there."""
    src = _feeder_source_nodes(data, feeder)
    data.fixed_nodes = {int(i): (feeder.source_vm, PHASE_ANGLE[ph]) for i, ph in zip(src, "abc")}
    inf = np.full(3, np.inf)
    data.gens = list(data.gens) + [
        GenData(
            label="slack",
            nodes=src,
            pmin=-inf,
            pmax=inf,
            qmin=-inf,
            qmax=inf,
            cost=(0.0, float(slack_price), 0.0),
            weight=data.gens[0].weight if data.gens else feeder.base_kva / 1000.0,
            priced=priced,
            is_slack=True,
        )
    ]
    return data


def assemble(case: ITDCase, form, *, trans_data=None, feeder_data=None, objective=True, kind="opfitd") -> ItdModel:
    """Build the joint model.  ``trans_data`` / ``feeder_data`` override the
    default :class:`NetData` (power-flow setpoints, reserves, fixed loads)."""
    form = Formulation.parse(form)
    mb = ModelBuilder()
    tdata = trans_data if trans_data is not None else transmission_data(case.transmission)
    fdata = list(feeder_data) if feeder_data is not None else [distribution_data(f) for f in case.feeders]

    tindex = tdata.node_index()
    linked = {l.feeder_index: k for k, l in enumerate(case.links)}
    t_nodes = [[tindex[str(l.trans_bus)]] for l in case.links]
    tspace = build_network(mb, form, tdata, "trans", t_nodes)

    fspaces = []
    for fi, (feeder, data) in enumerate(zip(case.feeders, fdata)):
        if fi in linked:
            src = _feeder_source_nodes(data, feeder)
            if form.rectangular:
                data.guard_nodes = src[:1]
            bnodes = [src]
        else:
            if not data.fixed_nodes:
                isolate_feeder(data, feeder)
            bnodes = []
        fspaces.append(build_network(mb, form, data, f"dist[{feeder.name}]", bnodes))

    couplings = []
    names = []
    for k, l in enumerate(case.links):
        label = f"{l.trans_bus}:{l.dist_network}"
        couplings.append((label, tspace, k, fspaces[l.feeder_index], 0, l.factor))
        names.append(f"boundary[{label}]")
    build_boundary(mb, form, couplings)

    if objective:
        add_generator_costs(mb, tspace)
        for sp in fspaces:
            add_generator_costs(mb, sp)
    nlp = mb.build()
    nlp.auto_scale()
    return ItdModel(nlp, form, case, tspace, fspaces, names, kind)


def build_opfitd(case: ITDCase, formulation) -> ItdModel:
    """Joint OPF: minimum total fuel cost over transmission and every feeder."""
    return assemble(case, formulation)


# --------------------------------------------------------------------------
# power flow


@dataclass
class Setpoints:
    """Fixed operating point for the power-flow problem (per unit).

    ``trans_pg`` maps generator position (in ``TransmissionNetwork.generators``)
    to active power and ``trans_qg`` to reactive power; ``trans_vm`` maps bus id to voltage magnitude;
    ``feeder_pq`` maps ``(feeder name, generator id)`` to per-phase ``(p, q)``.
    """

    trans_pg: dict = field(default_factory=dict)
    trans_qg: dict = field(default_factory=dict)
    trans_vm: dict = field(default_factory=dict)
    feeder_pq: dict = field(default_factory=dict)

    @classmethod
    def from_document(cls, doc: dict) -> "Setpoints":
        """Setpoints read back from an OPF result document (as written by ``to_document``)."""
        sp = cls()
        trans = doc["transmission"]
        base = float(trans["base_mva"])
        vm = {str(b["bus"]): b["vm"] for b in trans["buses"] if "vm" in b}
        for g in trans["generators"]:
            k = int(g["index"]) - 1
            sp.trans_pg[k] = float(g["pg_mw"]) / base
            sp.trans_qg[k] = float(g["qg_mvar"]) / base
            if str(g["bus"]) in vm:
                sp.trans_vm[g["bus"]] = float(vm[str(g["bus"])])
        for f in doc.get("feeders", []):
            kva = float(f["base_kva"])
            for g in f["generators"]:
                p = np.asarray(g["pg_kw"], float) / kva
                q = np.asarray(g["qg_kvar"], float) / kva
                sp.feeder_pq[(f["name"], g["id"])] = (p, q)
        return sp


def setpoints_from_result(result) -> Setpoints:
    return result.setpoints()


def build_pfitd(case: ITDCase, formulation, setpoints: Setpoints) -> ItdModel:
    """Power flow: the physics rows of the joint OPF with dispatch fixed.

    Non-reference transmission generators have P fixed; voltage magnitudes are
    fixed at generator (PV and reference) buses; feeder generators have P and Q
    fixed.  The first generator at the reference bus has free P, the first
    generator at each voltage-controlled bus has free Q, and operating limits are left out of the model.  They are
    checked on the converged point instead (see :func:`limit_violations`).
    The objective is identically zero.
    """
    form = Formulation.parse(formulation)
    tdata = transmission_data(case.transmission)
    tdata.limits = False
    ref_nodes = set(int(i) for i in tdata.ref_nodes)
    index = tdata.node_index()
    pv_nodes = {index[str(b)] for b in setpoints.trans_vm if str(b) in index} if form.has_voltage else set()
    inf = np.array([np.inf])
    seen = set()
    for g in tdata.gens:
        node = int(g.nodes[0])
        k = g.source_index
        # one generator per controlled bus absorbs the mismatch; others hold their setpoint
        first = node not in seen
        seen.add(node)
        if node in ref_nodes and first:
            g.pmin, g.pmax = -inf, inf
        elif k in setpoints.trans_pg:
            g.pmin = g.pmax = np.array([float(setpoints.trans_pg[k])])
        if node in ref_nodes or node in pv_nodes:
            if first or k not in setpoints.trans_qg:
                g.qmin, g.qmax = -inf, inf
            else:
                g.qmin = g.qmax = np.array([float(setpoints.trans_qg[k])])
    for bus, vm in setpoints.trans_vm.items():
        if form.has_voltage and str(bus) in index:
            tdata.vm_set[index[str(bus)]] = float(vm)
    fdata = []
    for feeder in case.feeders:
        data = distribution_data(feeder)
        data.limits = False
        for g in data.gens:
            key = (feeder.name, g.label)
            if key in setpoints.feeder_pq:
                p, q = setpoints.feeder_pq[key]
                g.pmin = g.pmax = np.asarray(p, float).copy()
                if form.has_voltage:
                    g.qmin = g.qmax = np.asarray(q, float).copy()
        fdata.append(data)
    return assemble(case, form, trans_data=tdata, feeder_data=fdata, objective=False, kind="pfitd")


def _branch_power(sp: NetSpace, V):
    """Per-conductor complex power entering each branch at both terminals."""
    out = []
    for br in sp.data.branches:
        Vf, Vt = V[br.f_nodes], V[br.t_nodes]
        Sf = Vf * np.conj(br.Yff @ Vf + br.Yft @ Vt)
        St = Vt * np.conj(br.Ytf @ Vf + br.Ytt @ Vt)
        out.append((br, Sf, St))
    return out


def limit_violations(case: ITDCase, im: ItdModel, x, tol=1e-6):
    """Operating limits of the original case that the point ``x`` breaks."""
    out = []
    ref = [transmission_data(case.transmission)] + [distribution_data(f) for f in case.feeders]
    for data, sp in zip(ref, [im.trans] + list(im.feeders)):
        where = sp.prefix
        by_label = {g.label: g for g in data.gens}
        for g, (p, q) in zip(sp.data.gens, sp.gen_dispatch(x)):
            orig = by_label.get(g.label)
            if orig is None:
                continue
            if np.any(p < orig.pmin - tol) or np.any(p > orig.pmax + tol):
                out.append(f"{where}: generator {g.label} active power {np.round(p, 6).tolist()} outside "
                           f"[{orig.pmin.tolist()}, {orig.pmax.tolist()}]")
            if sp.form.has_voltage and (np.any(q < orig.qmin - tol) or np.any(q > orig.qmax + tol)):
                out.append(f"{where}: generator {g.label} reactive power outside its limits")
        if not sp.form.has_voltage:
            continue
        V = sp.voltage(x)
        vm = np.abs(V)
        bad = np.flatnonzero((vm < data.vmin - tol) | (vm > data.vmax + tol))
        for i in bad:
            out.append(f"{where}: voltage {vm[i]:.6f} at {data.node_labels[i]} outside "
                       f"[{data.vmin[i]}, {data.vmax[i]}]")
        for br, Sf, St in _branch_power(sp, V):
            for S in (Sf, St):
                if np.any(np.abs(S.real) > br.pmax + tol) or np.any(np.abs(S.imag) > br.qmax + tol):
                    out.append(f"{where}: flow limit exceeded on {br.label}")
                    break
            d = np.angle(V[br.f_nodes] * np.conj(V[br.t_nodes]))
            if np.any(d < br.angmin - tol) or np.any(d > br.angmax + tol):
                out.append(f"{where}: angle difference limit exceeded on {br.label}")
    return out


# --------------------------------------------------------------------------
# solving and decoding


def run_solver(nlp: NlpModel, form: Formulation, opts: SolverOptions | None) -> Solution:
    opts = opts or SolverOptions()
    if form is Formulation.NFA and nlp.is_affine():
        return solve_linear(nlp, opts)
    return solve(nlp, opts)


def gen_cost(g, p):
    """Fuel cost in $/hr of generator data ``g`` at conductor dispatch ``p`` (p.u.)."""
    c2, c1, c0 = g.cost
    mw = g.weight * float(np.sum(p))
    return c2 * mw * mw + c1 * mw + c0


@dataclass
class ITDResult:
    formulation: Formulation
    kind: str
    case_name: str
    solution: Solution
    transmission: dict
    feeders: list
    boundary: list
    trans_cost: float
    feeder_costs: dict
    _setpoints: Setpoints = field(default=None, repr=False)
    model: NlpModel = field(default=None, repr=False)  # the solved model, for re-verification

    @property
    def status(self) -> Status:
        return self.solution.status

    @property
    def optimal(self):
        return self.solution.optimal

    @property
    def objective(self):
        return self.solution.objective

    @property
    def iterations(self):
        return self.solution.iterations

    @property
    def seconds(self):
        return self.solution.seconds

    def setpoints(self) -> Setpoints:
        return self._setpoints

    def max_boundary_residual(self):
        return max((b["residual"] for b in self.boundary), default=0.0)

    def to_document(self) -> dict:
        s = self.solution
        return {
            "case": self.case_name,
            "problem": self.kind,
            "formulation": self.formulation.value,
            "status": s.status.value,
            "objective_usd_per_hr": s.objective,
            "transmission_cost_usd_per_hr": self.trans_cost,
            "feeder_cost_usd_per_hr": dict(self.feeder_costs),
            "iterations": s.iterations,
            "solve_time_s": s.seconds,
            "kkt": {"stationarity": s.stationarity, "feasibility": s.feasibility,
                    "complementarity": s.complementarity},
            "transmission": self.transmission,
            "feeders": self.feeders,
            "boundary": self.boundary,
        }


def _deg(x):
    return float(np.degrees(x))


def _voltages(sp: NetSpace, x):
    if not sp.form.has_voltage:
        return None
    V = sp.voltage(x)
    return np.abs(V), np.angle(V)


def decode(im: ItdModel, sol: Solution) -> ITDResult:
    x = sol.x
    case = im.case
    tnet = case.transmission
    ts = im.trans
    base = tnet.base_mva
    vt = _voltages(ts, x)
    trans = {"base_mva": base, "buses": [], "generators": []}
    for i, bus_id in enumerate(ts.data.node_bus):
        row = {"bus": bus_id}
        if vt is not None:
            row["vm"] = float(vt[0][i])
            row["va_deg"] = _deg(vt[1][i])
        trans["buses"].append(row)
    trans_cost = 0.0
    sp = Setpoints()
    for g, (p, q) in zip(ts.data.gens, ts.gen_dispatch(x)):
        cost = gen_cost(g, p)
        trans_cost += cost
        trans["generators"].append({
            "index": g.source_index + 1,
            "bus": ts.data.node_bus[int(g.nodes[0])],
            "pg_mw": float(p[0] * base),
            "qg_mvar": float(q[0] * base),
            "cost_usd_per_hr": cost,
        })
        sp.trans_pg[g.source_index] = float(p[0])
        sp.trans_qg[g.source_index] = float(q[0])
        if vt is not None:
            sp.trans_vm[ts.data.node_bus[int(g.nodes[0])]] = float(vt[0][int(g.nodes[0])])

    feeders, fcosts = [], {}
    for feeder, ds in zip(case.feeders, im.feeders):
        vd = _voltages(ds, x)
        kva = feeder.base_kva
        nodes = []
        for i, lab in enumerate(ds.data.node_labels):
            row = {"bus": ds.data.node_bus[i], "phase": ds.data.node_phase[i]}
            if vd is not None:
                row["vm"] = float(vd[0][i])
                row["va_deg"] = _deg(vd[1][i])
            nodes.append(row)
        gens, cost = [], 0.0
        for g, (p, q) in zip(ds.data.gens, ds.gen_dispatch(x)):
            slack = g.is_slack
            c = 0.0 if slack else gen_cost(g, p)
            cost += c
            gens.append({
                "id": g.label,
                "phases": [ds.data.node_phase[int(n)] for n in g.nodes],
                "pg_kw": [float(v * kva) for v in p],
                "qg_kvar": [float(v * kva) for v in q],
                "cost_usd_per_hr": c,
            })
            if not slack:
                sp.feeder_pq[(feeder.name, g.label)] = (p.copy(), q.copy())
        fcosts[feeder.name] = cost
        feeders.append({"name": feeder.name, "base_kva": kva, "nodes": nodes, "generators": gens})

    boundary = []
    for k, (link, name) in enumerate(zip(case.links, im.link_blocks)):
        tb = ts.boundary[k]
        db = im.feeders[link.feeder_index].boundary[0]
        kva = case.feeders[link.feeder_index].base_kva
        blk = im.nlp.block(name)
        res = blk.residual(x)
        viol = float(np.max(np.abs(res - blk.cl))) if blk.m else 0.0
        entry = {
            "transmission_bus": link.trans_bus,
            "feeder": link.dist_network,
            "distribution_bus": link.dist_bus,
            "p_mw": float(x[tb["p"][0]] * base),
            "p_kw": [float(v * kva) for v in x[db["p"]]],
            "closure_p": float(x[tb["p"][0]] + link.factor * np.sum(x[db["p"]])),
            "residual": viol,
        }
        if "q" in tb:
            entry["q_mvar"] = float(x[tb["q"][0]] * base)
            entry["q_kvar"] = [float(v * kva) for v in x[db["q"]]]
            entry["closure_q"] = float(x[tb["q"][0]] + link.factor * np.sum(x[db["q"]]))
        boundary.append(entry)

    return ITDResult(im.form, im.kind, case.name, sol, trans, feeders, boundary, trans_cost, fcosts, sp, im.nlp)


def solve_model(im: ItdModel, opts: SolverOptions | None = None) -> ITDResult:
    sol = run_solver(im.nlp, im.form, opts)
    return decode(im, sol)


def solve_opfitd(case: ITDCase, formulation, opts: SolverOptions | None = None) -> ITDResult:
    return solve_model(build_opfitd(case, formulation), opts)


def solve_pfitd(case: ITDCase, formulation, setpoints: Setpoints, opts: SolverOptions | None = None) -> ITDResult:
    """Solve the power flow; a converged point that breaks a limit is reported Infeasible."""
    im = build_pfitd(case, formulation, setpoints)
    sol = run_solver(im.nlp, im.form, opts)
    if sol.status is Status.OPTIMAL:
        bad = limit_violations(case, im, sol.x)
        if bad:
            sol = replace(sol, status=Status.INFEASIBLE, message="; ".join(bad[:5]))
    return decode(im, sol)


def verify_kkt(im: ItdModel, sol: Solution):
    """Recompute the KKT residual norms outside the solver."""
    return kkt_residuals(im.nlp, sol.x, sol.y, sol.zl, sol.zu)


__all__ = [
    "ITDResult",
    "ItdModel",
    "Setpoints",
    "assemble",
    "build_opfitd",
    "build_pfitd",
    "decode",
    "gen_cost",
    "isolate_feeder",
    "limit_violations",
    "setpoints_from_result",
    "solve_model",
    "solve_opfitd",
    "solve_pfitd",
    "verify_kkt",
]
