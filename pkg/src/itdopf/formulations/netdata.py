"""Conductor-level view shared by transmission and distribution builders.

A transmission network is the one-conductor special case of a three-phase
feeder: every bus contributes one node, every branch one conductor pair with
1x1 admittance blocks.  Feeders contribute one node per (bus, phase) and
k x k blocks per line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..network import DistributionNetwork, TransmissionNetwork
from .common import PHASE_ANGLE


@dataclass
class GenData:
    label: str
    nodes: np.ndarray
    pmin: np.ndarray
    pmax: np.ndarray
    qmin: np.ndarray
    qmax: np.ndarray
    cost: tuple
    weight: float  # MW per p.u. of the summed conductor dispatch
    priced: bool = True
    is_slack: bool = False
    source_index: int = -1


@dataclass
class BranchData:
    label: str
    f_nodes: np.ndarray
    t_nodes: np.ndarray
    Yff: np.ndarray
    Yft: np.ndarray
    Ytf: np.ndarray
    Ytt: np.ndarray
    pmax: np.ndarray
    qmax: np.ndarray
    angmin: np.ndarray
    angmax: np.ndarray
    source_index: int = -1


@dataclass
class NetData:
    name: str
    owner: str
    node_labels: list
    node_bus: list
    node_phase: list
    vmin: np.ndarray
    vmax: np.ndarray
    flat_vm: np.ndarray
    flat_va: np.ndarray
    gs: np.ndarray
    bs: np.ndarray
    pd: np.ndarray
    qd: np.ndarray
    gens: list
    branches: list
    ref_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    fixed_nodes: dict = field(default_factory=dict)
    guard_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    vm_set: dict = field(default_factory=dict)  # node -> fixed magnitude (power-flow setpoints)
    limits: bool = True  # False drops voltage, flow and angle-difference limits

    @property
    def n_nodes(self):
        return len(self.node_labels)

    def node_index(self):
        return {lab: k for k, lab in enumerate(self.node_labels)}


def transmission_data(net: TransmissionNetwork) -> NetData:
    buses = [b for b in net.buses if b.in_service]
    index = {b.id: k for k, b in enumerate(buses)}
    gens = []
    for k, g in enumerate(net.generators):
        if not g.in_service or g.bus not in index:
            continue
        gens.append(
            GenData(
                label=f"gen{k + 1}",
                nodes=np.array([index[g.bus]]),
                pmin=np.array([g.p_min]),
                pmax=np.array([g.p_max]),
                qmin=np.array([g.q_min]),
                qmax=np.array([g.q_max]),
                cost=tuple(g.cost),
                weight=net.base_mva,
                source_index=k,
            )
        )
    branches = []
    for k, br in enumerate(net.branches):
        if not br.in_service or br.f_bus not in index or br.t_bus not in index:
            continue
        y = complex(br.g, br.b)
        ysh = 0.5j * br.b_charge
        T = br.tau * np.exp(1j * br.shift)
        branches.append(
            BranchData(
                label=f"branch{k + 1}",
                f_nodes=np.array([index[br.f_bus]]),
                t_nodes=np.array([index[br.t_bus]]),
                Yff=np.array([[(y + ysh) / (br.tau**2)]]),
                Yft=np.array([[-y / np.conj(T)]]),
                Ytf=np.array([[-y / T]]),
                Ytt=np.array([[y + ysh]]),
                pmax=np.array([br.s_max]),
                qmax=np.array([br.s_max]),
                angmin=np.array([br.angmin]),
                angmax=np.array([br.angmax]),
                source_index=k,
            )
        )
    return NetData(
        name=net.name,
        owner="trans",
        node_labels=[str(b.id) for b in buses],
        node_bus=[b.id for b in buses],
        node_phase=[""] * len(buses),
        vmin=np.array([b.v_min for b in buses]),
        vmax=np.array([b.v_max for b in buses]),
        flat_vm=np.ones(len(buses)),
        flat_va=np.zeros(len(buses)),
        gs=np.array([b.gs for b in buses]),
        bs=np.array([b.bs for b in buses]),
        pd=np.array([b.pd for b in buses]),
        qd=np.array([b.qd for b in buses]),
        gens=gens,
        branches=branches,
        ref_nodes=np.array([index[b.id] for b in buses if b.is_reference], dtype=np.int64),
    )


def distribution_data(net: DistributionNetwork) -> NetData:
    labels, bus_of, phase_of = [], [], []
    vmin, vmax, gs, bs, va = [], [], [], [], []
    for b in net.buses:
        for k, ph in enumerate(b.phases):
            labels.append(f"{b.id}.{ph}")
            bus_of.append(b.id)
            phase_of.append(ph)
            vmin.append(b.v_min[k])
            vmax.append(b.v_max[k])
            gs.append(b.gs[k])
            bs.append(b.bs[k])
            va.append(PHASE_ANGLE[ph])
    index = {lab: k for k, lab in enumerate(labels)}
    pd = np.zeros(len(labels))
    qd = np.zeros(len(labels))
    for d in net.loads:
        for k, ph in enumerate(d.phases):
            pd[index[f"{d.bus}.{ph}"]] += d.pd[k]
            qd[index[f"{d.bus}.{ph}"]] += d.qd[k]
    weight = net.base_kva / 1000.0
    gens = []
    for g in net.generators:
        if not g.in_service:
            continue
        gens.append(
            GenData(
                label=g.id,
                nodes=np.array([index[f"{g.bus}.{ph}"] for ph in g.phases]),
                pmin=np.array(g.p_min),
                pmax=np.array(g.p_max),
                qmin=np.array(g.q_min),
                qmax=np.array(g.q_max),
                cost=tuple(g.cost),
                weight=weight,
            )
        )
    branches = []
    for ln in net.lines:
        Y = np.asarray(ln.y_series, complex)
        Ysh = np.diag(0.5j * np.asarray(ln.b_shunt, float))
        T = np.asarray(ln.tau) * np.exp(1j * np.asarray(ln.shift))
        Yff = (Y + Ysh) / np.outer(np.conj(T), T)
        Yft = -Y / np.conj(T)[:, None]
        Ytf = -Y / T[None, :]
        branches.append(
            BranchData(
                label=ln.id,
                f_nodes=np.array([index[f"{ln.f_bus}.{ph}"] for ph in ln.phases]),
                t_nodes=np.array([index[f"{ln.t_bus}.{ph}"] for ph in ln.phases]),
                Yff=Yff,
                Yft=Yft,
                Ytf=Ytf,
                Ytt=Y + Ysh,
                pmax=np.array(ln.p_max),
                qmax=np.array(ln.q_max),
                angmin=np.array(ln.angmin),
                angmax=np.array(ln.angmax),
            )
        )
    return NetData(
        name=net.name,
        owner="dist",
        node_labels=labels,
        node_bus=bus_of,
        node_phase=phase_of,
        vmin=np.array(vmin),
        vmax=np.array(vmax),
        flat_vm=np.ones(len(labels)),
        flat_va=np.array(va),
        gs=np.array(gs),
        bs=np.array(bs),
        pd=pd,
        qd=qd,
        gens=gens,
        branches=branches,
    )
