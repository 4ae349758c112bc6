"""Variables and constraint blocks of one network (transmission or feeder).

Both network levels go through :func:`build_network`; they differ only in the
:class:`~itdopf.formulations.netdata.NetData` they are given.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .common import (
    Formulation,
    add_angle_difference,
    add_current,
    add_pair,
    add_power_product,
    midpoint,
)
from .netdata import NetData

_I = np.int64
_RIGHT_ANGLE = 0.5 * np.pi - 1e-9


@dataclass
class NetSpace:
    """Variable indices of one network inside the global vector."""

    form: Formulation
    data: NetData
    prefix: str
    v1: np.ndarray | None = None  # vm (polar) or vr (rectangular), per node
    v2: np.ndarray | None = None  # va or vi
    pg: np.ndarray = field(default_factory=lambda: np.zeros(0, _I))
    qg: np.ndarray = field(default_factory=lambda: np.zeros(0, _I))
    crg: np.ndarray = field(default_factory=lambda: np.zeros(0, _I))
    cig: np.ndarray = field(default_factory=lambda: np.zeros(0, _I))
    gen_slices: list = field(default_factory=list)
    flows: dict = field(default_factory=dict)
    branch_slices: list = field(default_factory=list)
    cond_f: np.ndarray = field(default_factory=lambda: np.zeros(0, _I))
    cond_t: np.ndarray = field(default_factory=lambda: np.zeros(0, _I))
    load_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, _I))
    load_cr: np.ndarray = field(default_factory=lambda: np.zeros(0, _I))
    load_ci: np.ndarray = field(default_factory=lambda: np.zeros(0, _I))
    boundary: list = field(default_factory=list)  # per link: dict(nodes, p, q[, cr, ci])

    @property
    def n_nodes(self):
        return self.data.n_nodes

    def voltage(self, x):
        """Complex node voltages at ``x`` (ones for NFA)."""
        if self.v1 is None:
            return np.ones(self.n_nodes, complex)
        a, b = x[self.v1], x[self.v2]
        if self.form.polar:
            return a * np.exp(1j * b)
        return a + 1j * b

    def gen_dispatch(self, x):
        """Per-generator conductor dispatch ``[(p, q), ...]`` in per unit."""
        out = []
        for sl in self.gen_slices:
            p = x[self.pg[sl]]
            q = x[self.qg[sl]] if len(self.qg) else np.zeros_like(p)
            out.append((p, q))
        return out


def _gen_arrays(data: NetData):
    if not data.gens:
        z = np.zeros(0)
        return np.zeros(0, _I), z, z, z, z, []
    nodes = np.concatenate([g.nodes for g in data.gens]).astype(_I)
    slices, k = [], 0
    for g in data.gens:
        slices.append(slice(k, k + len(g.nodes)))
        k += len(g.nodes)
    cat = lambda attr: np.concatenate([np.asarray(getattr(g, attr), float) for g in data.gens])
    return nodes, cat("pmin"), cat("pmax"), cat("qmin"), cat("qmax"), slices


def _branch_arrays(data: NetData):
    """Flatten branch conductors and their admittance pair entries."""
    cf, ct, pmax, qmax, amin, amax, slices = [], [], [], [], [], [], []
    # pair entries: (conductor, side 'f'/'t', a node, c node, Y)
    e_cond, e_side, e_a, e_c, e_y = [], [], [], [], []
    k = 0
    for br in data.branches:
        K = len(br.f_nodes)
        slices.append(slice(k, k + K))
        for phi in range(K):
            cf.append(br.f_nodes[phi])
            ct.append(br.t_nodes[phi])
            pmax.append(br.pmax[phi])
            qmax.append(br.qmax[phi])
            amin.append(br.angmin[phi])
            amax.append(br.angmax[phi])
            for rho in range(K):
                for side, a, c, Y in (
                    (0, br.f_nodes[phi], br.f_nodes[rho], br.Yff[phi, rho]),
                    (0, br.f_nodes[phi], br.t_nodes[rho], br.Yft[phi, rho]),
                    (1, br.t_nodes[phi], br.f_nodes[rho], br.Ytf[phi, rho]),
                    (1, br.t_nodes[phi], br.t_nodes[rho], br.Ytt[phi, rho]),
                ):
                    if Y == 0:
                        continue
                    e_cond.append(k + phi)
                    e_side.append(side)
                    e_a.append(a)
                    e_c.append(c)
                    e_y.append(Y)
        k += K
    entries = (
        np.array(e_cond, _I),
        np.array(e_side, _I),
        np.array(e_a, _I),
        np.array(e_c, _I),
        np.array(e_y, complex),
    )
    return (
        np.array(cf, _I),
        np.array(ct, _I),
        np.array(pmax, float),
        np.array(qmax, float),
        np.array(amin, float),
        np.array(amax, float),
        slices,
        entries,
    )


def build_network(mb, form: Formulation, data: NetData, prefix: str, boundary_nodes=()) -> NetSpace:
    """Add variables and blocks of one network to the model builder ``mb``.

    ``boundary_nodes`` lists, per link attached to this network, the node
    indices (one per conductor) that exchange power with the other level.
    Boundary power (and, for IVR, current) variables are created here, so
    each link owns them exactly once.
    """
    form = Formulation.parse(form)
    owner = data.owner
    sp = NetSpace(form=form, data=data, prefix=prefix)
    N = data.n_nodes
    labels = data.node_labels
    ref = np.asarray(data.ref_nodes, _I)
    fixed = dict(data.fixed_nodes)
    vm_set = dict(data.vm_set)

    # -- voltage variables ---------------------------------------------------
    if form.polar:
        if data.limits:
            lo, hi = data.vmin.copy(), data.vmax.copy()
        else:
            lo, hi = np.zeros(N), np.full(N, np.inf)
        va_lo = np.full(N, -np.inf)
        va_hi = np.full(N, np.inf)
        x_vm = np.clip(data.flat_vm, lo, hi)
        x_va = data.flat_va.copy()
        va_lo[ref] = va_hi[ref] = 0.0
        x_va[ref] = 0.0
        for i, v in vm_set.items():
            lo[i] = hi[i] = x_vm[i] = v
        for i, (vm, va) in fixed.items():
            lo[i] = hi[i] = x_vm[i] = vm
            va_lo[i] = va_hi[i] = x_va[i] = va
        sp.v1 = mb.add_vars(f"{prefix}.vm", N, lo, hi, x_vm, [f"{prefix}.vm[{s}]" for s in labels])
        sp.v2 = mb.add_vars(f"{prefix}.va", N, va_lo, va_hi, x_va, [f"{prefix}.va[{s}]" for s in labels])
    elif form.rectangular:
        vmax = data.vmax if data.limits else np.full(N, np.inf)
        e_lo, e_hi, f_lo, f_hi = -vmax.copy(), vmax.copy(), -vmax.copy(), vmax.copy()
        x_e = data.flat_vm * np.cos(data.flat_va)
        x_f = data.flat_vm * np.sin(data.flat_va)
        e_lo[ref] = 0.0
        f_lo[ref] = f_hi[ref] = x_f[ref] = 0.0
        for i in np.asarray(data.guard_nodes, _I):
            e_lo[i] = max(e_lo[i], 0.1)
        for i, (vm, va) in fixed.items():
            e_lo[i] = e_hi[i] = x_e[i] = vm * np.cos(va)
            f_lo[i] = f_hi[i] = x_f[i] = vm * np.sin(va)
        x_e = np.clip(x_e, e_lo, e_hi)
        sp.v1 = mb.add_vars(f"{prefix}.vr", N, e_lo, e_hi, x_e, [f"{prefix}.vr[{s}]" for s in labels])
        sp.v2 = mb.add_vars(f"{prefix}.vi", N, f_lo, f_hi, x_f, [f"{prefix}.vi[{s}]" for s in labels])

    # -- generators ----------------------------------------------------------
    g_nodes, pmin, pmax, qmin, qmax, g_slices = _gen_arrays(data)
    G = len(g_nodes)
    sp.gen_slices = g_slices
    g_labels = [f"{g.label}.{data.node_phase[n] or 'p'}" for g in data.gens for n in g.nodes]
    sp.pg = mb.add_vars(f"{prefix}.pg", G, pmin, pmax, midpoint(pmin, pmax),
                        [f"{prefix}.pg[{s}]" for s in g_labels])
    if form.has_voltage:
        sp.qg = mb.add_vars(f"{prefix}.qg", G, qmin, qmax, midpoint(qmin, qmax),
                            [f"{prefix}.qg[{s}]" for s in g_labels])
    if form is Formulation.IVR:
        sp.crg = mb.add_vars(f"{prefix}.crg", G, labels=[f"{prefix}.crg[{s}]" for s in g_labels])
        sp.cig = mb.add_vars(f"{prefix}.cig", G, labels=[f"{prefix}.cig[{s}]" for s in g_labels])

    # -- branches ------------------------------------------------------------
    cf, ct, fpmax, fqmax, amin, amax, b_slices, entries = _branch_arrays(data)
    C = len(cf)
    sp.cond_f, sp.cond_t, sp.branch_slices = cf, ct, b_slices
    c_labels = []
    for br, sl in zip(data.branches, b_slices):
        for k in range(sl.stop - sl.start):
            ph = data.node_phase[br.f_nodes[k]]
            c_labels.append(f"{br.label}.{ph}" if ph else br.label)
    if not data.limits and form is not Formulation.NFA:
        fpmax = np.full(C, np.inf)
        fqmax = np.full(C, np.inf)
    if form in (Formulation.ACP, Formulation.ACR):
        for key, lim in (("p_fr", fpmax), ("q_fr", fqmax), ("p_to", fpmax), ("q_to", fqmax)):
            sp.flows[key] = mb.add_vars(f"{prefix}.{key}", C, -lim, lim, 0.0,
                                        [f"{prefix}.{key}[{s}]" for s in c_labels])
    elif form is Formulation.IVR:
        for key in ("cr_fr", "ci_fr", "cr_to", "ci_to"):
            sp.flows[key] = mb.add_vars(f"{prefix}.{key}", C, labels=[f"{prefix}.{key}[{s}]" for s in c_labels])
    else:
        sp.flows["p"] = mb.add_vars(f"{prefix}.p", C, -fpmax, fpmax, 0.0, [f"{prefix}.p[{s}]" for s in c_labels])

    # -- IVR load currents ---------------------------------------------------
    if form is Formulation.IVR:
        sp.load_nodes = np.flatnonzero((data.pd != 0) | (data.qd != 0)).astype(_I)
        L = len(sp.load_nodes)
        ll = [labels[i] for i in sp.load_nodes]
        sp.load_cr = mb.add_vars(f"{prefix}.crd", L, labels=[f"{prefix}.crd[{s}]" for s in ll])
        sp.load_ci = mb.add_vars(f"{prefix}.cid", L, labels=[f"{prefix}.cid[{s}]" for s in ll])

    # -- boundary variables --------------------------------------------------
    for k, nodes in enumerate(boundary_nodes):
        nodes = np.asarray(nodes, _I)
        tag = [f"{prefix}.bnd{k}[{labels[i]}]" for i in nodes]
        entry = {"nodes": nodes}
        entry["p"] = mb.add_vars(f"{prefix}.pb", len(nodes), labels=[s.replace("bnd", "pb") for s in tag])
        if form.has_voltage:
            entry["q"] = mb.add_vars(f"{prefix}.qb", len(nodes), labels=[s.replace("bnd", "qb") for s in tag])
        if form is Formulation.IVR:
            entry["cr"] = mb.add_vars(f"{prefix}.crb", len(nodes), labels=[s.replace("bnd", "crb") for s in tag])
            entry["ci"] = mb.add_vars(f"{prefix}.cib", len(nodes), labels=[s.replace("bnd", "cib") for s in tag])
        sp.boundary.append(entry)

    V = (sp.v1, sp.v2)
    node_v = lambda idx: (V[0][idx], V[1][idx])  # noqa: E731

    # -- flow definitions (ACP/ACR) or terminal currents (IVR) ---------------
    e_cond, e_side, e_a, e_c, e_y = entries
    if form in (Formulation.ACP, Formulation.ACR):
        for kind, keys in (("P", ("p_fr", "p_to")), ("Q", ("q_fr", "q_to"))):
            bb = mb.block(f"{prefix}.flow_{kind.lower()}", owner, 2 * C)
            rows = e_cond + C * e_side
            add_pair(bb, rows, kind, form.polar, node_v(e_a), node_v(e_c), e_y.real, e_y.imag)
            bb.linear(np.arange(C), sp.flows[keys[0]], -1.0)
            bb.linear(C + np.arange(C), sp.flows[keys[1]], -1.0)
            bb.labels = [f"{kind}{s}:{c}" for s in ("fr", "to") for c in c_labels]
            mb.add_block(bb)
    elif form is Formulation.IVR:
        for part, keys in (("re", ("cr_fr", "cr_to")), ("im", ("ci_fr", "ci_to"))):
            bb = mb.block(f"{prefix}.current_{part}", owner, 2 * C)
            rows = e_cond + C * e_side
            add_current(bb, rows, part, node_v(e_c), e_y.real, e_y.imag)
            bb.linear(np.arange(C), sp.flows[keys[0]], -1.0)
            bb.linear(C + np.arange(C), sp.flows[keys[1]], -1.0)
            bb.labels = [f"I{part}{s}:{c}" for s in ("fr", "to") for c in c_labels]
            mb.add_block(bb)
        # flow limits as bilinear rows, only where a limit exists
        for kind, lim in (("P", fpmax), ("Q", fqmax)):
            has = np.flatnonzero(np.isfinite(lim))
            if not len(has):
                continue
            bb = mb.block(f"{prefix}.flow_limit_{kind.lower()}", owner, 2 * len(has),
                          np.tile(-lim[has], 2), np.tile(lim[has], 2))
            r = np.arange(len(has))
            add_power_product(bb, r, kind, node_v(cf[has]),
                              (sp.flows["cr_fr"][has], sp.flows["ci_fr"][has]))
            add_power_product(bb, len(has) + r, kind, node_v(ct[has]),
                              (sp.flows["cr_to"][has], sp.flows["ci_to"][has]))
            mb.add_block(bb)

    # -- IVR power definitions at generators, loads, boundary ---------------
    if form is Formulation.IVR:
        for kind, pv in (("P", sp.pg), ("Q", sp.qg)):
            bb = mb.block(f"{prefix}.gen_power_{kind.lower()}", owner, G)
            add_power_product(bb, np.arange(G), kind, node_v(g_nodes), (sp.crg, sp.cig))
            bb.linear(np.arange(G), pv, -1.0)
            mb.add_block(bb)
        L = len(sp.load_nodes)
        for kind, dem in (("P", data.pd), ("Q", data.qd)):
            bb = mb.block(f"{prefix}.load_power_{kind.lower()}", owner, L,
                          dem[sp.load_nodes], dem[sp.load_nodes])
            add_power_product(bb, np.arange(L), kind, node_v(sp.load_nodes), (sp.load_cr, sp.load_ci))
            mb.add_block(bb)
        for k, ent in enumerate(sp.boundary):
            nb = len(ent["nodes"])
            for kind, pv in (("P", ent["p"]), ("Q", ent["q"])):
                bb = mb.block(f"{prefix}.boundary_power{k}_{kind.lower()}", owner, nb)
                add_power_product(bb, np.arange(nb), kind, node_v(ent["nodes"]), (ent["cr"], ent["ci"]))
                bb.linear(np.arange(nb), pv, -1.0)
                mb.add_block(bb)

    # -- balance -------------------------------------------------------------
    if form is Formulation.IVR:
        for part, gkey, lkey, fkeys, bkey in (
            ("re", sp.crg, sp.load_cr, ("cr_fr", "cr_to"), "cr"),
            ("im", sp.cig, sp.load_ci, ("ci_fr", "ci_to"), "ci"),
        ):
            bb = mb.block(f"{prefix}.kcl_{part}", owner, N)
            bb.linear(g_nodes, gkey, 1.0)
            bb.linear(sp.load_nodes, lkey, -1.0)
            shunt = np.flatnonzero((data.gs != 0) | (data.bs != 0))
            add_current(bb, shunt, part, node_v(shunt), data.gs[shunt], data.bs[shunt], -1.0)
            bb.linear(cf, sp.flows[fkeys[0]], -1.0)
            bb.linear(ct, sp.flows[fkeys[1]], -1.0)
            for ent in sp.boundary:
                bb.linear(ent["nodes"], ent[bkey], -1.0)
            bb.labels = [f"{part}:{s}" for s in labels]
            mb.add_block(bb)
    else:
        kinds = (("P", sp.pg, data.pd, ("p_fr", "p_to"), "p"),)
        if form.has_voltage:
            kinds += (("Q", sp.qg, data.qd, ("q_fr", "q_to"), "q"),)
        for kind, gv, dem, fkeys, bkey in kinds:
            bb = mb.block(f"{prefix}.balance_{kind.lower()}", owner, N)
            bb.linear(g_nodes, gv, 1.0)
            bb.constant(np.arange(N), -dem)
            if form is Formulation.NFA:
                bb.constant(np.arange(N), -data.gs)
                bb.linear(cf, sp.flows["p"], -1.0)
                bb.linear(ct, sp.flows["p"], 1.0)
            else:
                shunt = np.flatnonzero((data.gs != 0) | (data.bs != 0))
                add_pair(bb, shunt, kind, form.polar, node_v(shunt), node_v(shunt),
                         data.gs[shunt], data.bs[shunt], -1.0)
                bb.linear(cf, sp.flows[fkeys[0]], -1.0)
                bb.linear(ct, sp.flows[fkeys[1]], -1.0)
            for ent in sp.boundary:
                bb.linear(ent["nodes"], ent[bkey], -1.0)
            bb.labels = [f"{kind}:{s}" for s in labels]
            mb.add_block(bb)

    if not form.has_voltage:
        return sp

    # -- voltage magnitude rows (rectangular) --------------------------------
    if form.rectangular:
        if data.limits:
            free = np.array([i for i in range(N) if i not in fixed], _I)
        else:
            free = np.array(sorted(i for i in vm_set if i not in fixed), _I)
        lo2, hi2 = data.vmin[free] ** 2, data.vmax[free] ** 2
        for i, v in vm_set.items():
            k = np.searchsorted(free, i)
            if k < len(free) and free[k] == i:
                lo2[k] = hi2[k] = v * v
        bb = mb.block(f"{prefix}.vmag", owner, len(free), lo2, hi2)
        r = np.arange(len(free))
        bb.quad(r, sp.v1[free], sp.v1[free], 1.0)
        bb.quad(r, sp.v2[free], sp.v2[free], 1.0)
        bb.labels = [f"|V|^2:{labels[i]}" for i in free]
        mb.add_block(bb)

    # -- angle differences ---------------------------------------------------
    sel = np.flatnonzero(np.isfinite(amin) | np.isfinite(amax))
    if not data.limits:
        sel = sel[:0]
    if form.rectangular:
        sel = sel[(np.abs(amin[sel]) < _RIGHT_ANGLE) & (np.abs(amax[sel]) < _RIGHT_ANGLE)]
    if len(sel):
        if form.polar:
            bb = mb.block(f"{prefix}.angle_diff", owner, len(sel), amin[sel], amax[sel])
            add_angle_difference(bb, np.arange(len(sel)), True, node_v(cf[sel]), node_v(ct[sel]),
                                 amin[sel], amax[sel])
        else:
            S = len(sel)
            cl = np.concatenate([np.full(S, -np.inf), np.zeros(S)])
            cu = np.concatenate([np.zeros(S), np.full(S, np.inf)])
            bb = mb.block(f"{prefix}.angle_diff", owner, 2 * S, cl, cu)
            add_angle_difference(bb, (np.arange(S), S + np.arange(S)), False,
                                 node_v(cf[sel]), node_v(ct[sel]), amin[sel], amax[sel])
        mb.add_block(bb)
    return sp


def add_generator_costs(mb, sp: NetSpace):
    """Fuel cost rows: ``c2 P^2 + c1 P + c0`` with P the phase-summed dispatch in MW."""
    for g, sl in zip(sp.data.gens, sp.gen_slices):
        if not g.priced:
            continue
        c2, c1, c0 = g.cost
        mb.add_cost(sp.pg[sl], g.weight, c2, c1, c0)
