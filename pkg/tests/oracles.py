"""Independent reference computations used by the tests.

Nothing here goes through ``itdopf.formulations``: admittances are formed
from the raw network objects with explicit ideal-transformer matrices, and
flows come from complex matrix-vector products.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sps


# -- branch models --------------------------------------------------------------

def trans_branch_primitive(br):
    """2x2 primitive admittance of a transmission branch (from, to)."""
    ys = 1.0 / complex(br.r, br.x)
    half = 0.5j * br.b_charge
    a = br.tau * np.exp(1j * br.shift)  # off-nominal ratio on the from side
    # from-side ideal transformer: V' = V / a, I = I' / conj(a)
    return np.array([
        [(ys + half) / (a * np.conj(a)), -ys / np.conj(a)],
        [-ys / a, ys + half],
    ])


def dist_line_primitive(ln):
    """6x6 primitive admittance of a three-wire line, ordered (from phases, to phases)."""
    Y = np.asarray(ln.y_series, complex)
    k = Y.shape[0]
    Ysh = np.diag(0.5j * np.asarray(ln.b_shunt, float))
    A = np.diag(1.0 / (np.asarray(ln.tau) * np.exp(1j * np.asarray(ln.shift))))
    Ac = np.conj(A)
    top = np.hstack([Ac @ (Y + Ysh) @ A, -Ac @ Y])
    bot = np.hstack([-Y @ A, Y + Ysh])
    out = np.vstack([top, bot])
    assert out.shape == (2 * k, 2 * k)
    return out


# -- per-network oracle -------------------------------------------------------------

class TransOracle:
    def __init__(self, net):
        self.net = net
        self.buses = [b for b in net.buses if b.in_service]
        self.index = {b.id: k for k, b in enumerate(self.buses)}
        self.branches = [br for br in net.branches if br.in_service]
        n = len(self.buses)
        self.prims = np.array([trans_branch_primitive(br) for br in self.branches]).reshape(-1, 2, 2)
        self.ends = np.array([(self.index[br.f_bus], self.index[br.t_bus]) for br in self.branches],
                             int).reshape(-1, 2)
        rows, cols, vals = [], [], []
        for br in self.branches:
            P = trans_branch_primitive(br)
            ends = (self.index[br.f_bus], self.index[br.t_bus])
            for i in range(2):
                for j in range(2):
                    rows.append(ends[i])
                    cols.append(ends[j])
                    vals.append(P[i, j])
        for k, b in enumerate(self.buses):
            rows.append(k)
            cols.append(k)
            vals.append(complex(b.gs, b.bs))
        self.Ybus = sps.csr_matrix((vals, (rows, cols)), shape=(n, n))
        self.Yshunt = np.array([complex(b.gs, b.bs) for b in self.buses])

    def branch_flows(self, V):
        """Complex power entering each in-service branch at its from and to ends."""
        v = V[self.ends]  # (branches, 2)
        s = v * np.conj(np.einsum("kij,kj->ki", self.prims, v))
        return s[:, 0], s[:, 1]

    def injections(self, V):
        """Net complex power leaving every bus into the network (branches plus shunt)."""
        return V * np.conj(self.Ybus @ V)


class DistOracle:
    def __init__(self, net):
        self.net = net
        self.labels = [f"{b.id}.{ph}" for b in net.buses for ph in b.phases]
        self.index = {lab: k for k, lab in enumerate(self.labels)}
        n = len(self.labels)
        Yb = np.zeros((n, n), complex)
        self.lines = list(net.lines)
        self.line_nodes = []
        self.prims = [dist_line_primitive(ln) for ln in self.lines]
        for ln in self.lines:
            nodes = [self.index[f"{ln.f_bus}.{ph}"] for ph in ln.phases] + \
                    [self.index[f"{ln.t_bus}.{ph}"] for ph in ln.phases]
            self.line_nodes.append(nodes)
            Yb[np.ix_(nodes, nodes)] += dist_line_primitive(ln)
        for b in net.buses:
            for k, ph in enumerate(b.phases):
                i = self.index[f"{b.id}.{ph}"]
                Yb[i, i] += complex(b.gs[k], b.bs[k])
        self.Ybus = Yb

    def line_flows(self, V):
        """Per line: (S_from per phase, S_to per phase)."""
        out = []
        for ln, nodes, prim in zip(self.lines, self.line_nodes, self.prims):
            v = V[nodes]
            s = v * np.conj(prim @ v)
            k = len(ln.phases)
            out.append((s[:k], s[k:]))
        return out

    def injections(self, V):
        return V * np.conj(self.Ybus @ V)


def rotate(phasor, degrees):
    return phasor * np.exp(1j * np.radians(degrees))


# -- scalar Newton power flow on a two-bus system ----------------------------------------

def two_bus_newton(r, x, b_charge, p_load, q_load, v_slack=1.0, tol=1e-13):
    """Receiving-end voltage of a slack bus feeding a PQ load through one line.

    Plain Newton iteration on the two real mismatch equations with a
    hand-written Jacobian (polar coordinates).
    """
    y = 1.0 / complex(r, x)
    g, b = y.real, y.imag
    bc = b_charge / 2.0
    vm, va = 1.0, 0.0
    for _ in range(50):
        # power injected at bus 2 into the network
        c, s = np.cos(va), np.sin(va)
        P = vm * vm * g - vm * v_slack * (g * c + b * s)
        Q = -vm * vm * (b + bc) - vm * v_slack * (g * s - b * c)
        F = np.array([P + p_load, Q + q_load])
        if np.max(np.abs(F)) < tol:
            break
        dP_dva = -vm * v_slack * (-g * s + b * c)
        dP_dvm = 2 * vm * g - v_slack * (g * c + b * s)
        dQ_dva = -vm * v_slack * (g * c + b * s)
        dQ_dvm = -2 * vm * (b + bc) - v_slack * (g * s - b * c)
        J = np.array([[dP_dva, dP_dvm], [dQ_dva, dQ_dvm]])
        dva, dvm = np.linalg.solve(J, -F)
        va += dva
        vm += dvm
    return vm, va


# -- model-versus-oracle comparison -----------------------------------------------

def _voltage(sp, x):
    a, b = x[sp.v1], x[sp.v2]
    return a * np.exp(1j * b) if sp.form.polar else a + 1j * b


def _bus_sums(nodes, values, n):
    out = np.zeros(n)
    np.add.at(out, nodes, values)
    return out


def network_errors(nlp, sp, oracle, x, loads_p, loads_q):
    """Max |model residual - oracle residual| for the flow and balance blocks of one network.

    Flow blocks are compared at ``x``.  Balance blocks are compared at ``x``
    with the flow variables overwritten by the oracle flows, so the expected
    residual is generation - load - Y-bus injection - boundary withdrawal.
    """
    V = _voltage(sp, x)
    if hasattr(oracle, "branch_flows"):
        Sf, St = oracle.branch_flows(V)
    else:
        flows = oracle.line_flows(V)
        Sf = np.concatenate([f for f, _ in flows]) if flows else np.zeros(0, complex)
        St = np.concatenate([t for _, t in flows]) if flows else np.zeros(0, complex)
    errs = {}
    for kind, part, keys in (("p", np.real, ("p_fr", "p_to")), ("q", np.imag, ("q_fr", "q_to"))):
        res = nlp.block(f"{sp.prefix}.flow_{kind}").residual(x)
        want = np.concatenate([part(Sf) - x[sp.flows[keys[0]]], part(St) - x[sp.flows[keys[1]]]])
        errs[f"flow_{kind}"] = float(np.max(np.abs(res - want), initial=0.0))

    xs = x.copy()
    xs[sp.flows["p_fr"]], xs[sp.flows["p_to"]] = Sf.real, St.real
    xs[sp.flows["q_fr"]], xs[sp.flows["q_to"]] = Sf.imag, St.imag
    n = sp.data.n_nodes
    gen_nodes = np.concatenate([g.nodes for g in sp.data.gens]) if sp.data.gens else np.zeros(0, int)
    inj = oracle.injections(V)
    for kind, part, gv, load, bkey in (("p", np.real, sp.pg, loads_p, "p"), ("q", np.imag, sp.qg, loads_q, "q")):
        gen = _bus_sums(gen_nodes, xs[gv], n)
        bnd = np.zeros(n)
        for ent in sp.boundary:
            np.add.at(bnd, ent["nodes"], xs[ent[bkey]])
        want = gen - load - part(inj) - bnd
        res = nlp.block(f"{sp.prefix}.balance_{kind}").residual(xs)
        errs[f"balance_{kind}"] = float(np.max(np.abs(res - want), initial=0.0))
    return errs


def feeder_loads(net, oracle):
    p = np.zeros(len(oracle.labels))
    q = np.zeros(len(oracle.labels))
    for d in net.loads:
        for k, ph in enumerate(d.phases):
            p[oracle.index[f"{d.bus}.{ph}"]] += d.pd[k]
            q[oracle.index[f"{d.bus}.{ph}"]] += d.qd[k]
    return p, q


def model_oracle_errors(im, points):
    """Largest deviation over ``points`` between model blocks and the complex oracle."""
    case = im.case
    to = TransOracle(case.transmission)
    tp = np.array([b.pd for b in to.buses])
    tq = np.array([b.qd for b in to.buses])
    feeders = []
    for f, sp in zip(case.feeders, im.feeders):
        o = DistOracle(f)
        assert o.labels == list(sp.data.node_labels)
        feeders.append((sp, o, *feeder_loads(f, o)))
    worst = 0.0
    for x in points:
        for sp, o, lp, lq in [(im.trans, to, tp, tq)] + feeders:
            worst = max(worst, max(network_errors(im.nlp, sp, o, x, lp, lq).values()))
    return worst
