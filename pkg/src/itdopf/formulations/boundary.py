"""Coupling rows between a transmission bus and a three-phase feeder source bus."""

from __future__ import annotations

import numpy as np

from ..errors import PhaseMismatch
from .builder import NetSpace
from .common import PHASE_ANGLE, Formulation

ROWS_PER_LINK = {Formulation.ACP: 8, Formulation.ACR: 8, Formulation.IVR: 8, Formulation.NFA: 1}


def build_boundary(mb, form, couplings):
    """Add one ``boundary[k]`` block per link.

    ``couplings`` is a sequence of ``(label, trans_space, trans_slot,
    dist_space, dist_slot, factor)``; the slots index ``NetSpace.boundary``.
    ``factor`` converts feeder-base power to transmission base.
    """
    form = Formulation.parse(form)
    out = []
    for k, (label, ts, tslot, ds, dslot, factor) in enumerate(couplings):
        out.append(_link_block(mb, form, f"boundary[{label}]", ts, ts.boundary[tslot],
                               ds, ds.boundary[dslot], factor))
    return out


def _link_block(mb, form, name, ts: NetSpace, tb, ds: NetSpace, db, factor):
    if len(tb["nodes"]) != 1 or len(db["nodes"]) != 3:
        raise PhaseMismatch(f"{name}: expected one transmission node and three feeder phases")
    phases = [ds.data.node_phase[i] for i in db["nodes"]]
    if phases != ["a", "b", "c"]:
        raise PhaseMismatch(f"{name}: feeder boundary phases {phases} are not a, b, c")
    m = ROWS_PER_LINK[form]
    bb = mb.block(name, "boundary", m)
    if form is Formulation.NFA:
        bb.linear(0, tb["p"][0], 1.0)
        bb.linear(np.zeros(3, np.int64), db["p"], factor)
        bb.labels = ["P"]
        return mb.add_block(bb)

    t = tb["nodes"][0]
    d = db["nodes"]
    T1, T2 = ts.v1[t], ts.v2[t]
    D1, D2 = ds.v1[d], ds.v2[d]
    zeros3 = np.zeros(3, np.int64)

    # rows 0, 1: power closure
    if form is Formulation.IVR:
        for row, kind in ((0, "P"), (1, "Q")):
            e, f, cr, ci = T1, T2, tb["cr"][0], tb["ci"][0]
            de, df, dcr, dci = D1, D2, db["cr"], db["ci"]
            if kind == "P":
                bb.quad(row, e, cr, 1.0).quad(row, f, ci, 1.0)
                bb.quad(row + zeros3, de, dcr, factor).quad(row + zeros3, df, dci, factor)
            else:
                bb.quad(row, f, cr, 1.0).quad(row, e, ci, -1.0)
                bb.quad(row + zeros3, df, dcr, factor).quad(row + zeros3, de, dci, -factor)
    else:
        for row, key in ((0, "p"), (1, "q")):
            bb.linear(row, tb[key][0], 1.0)
            bb.linear(row + zeros3, db[key], factor)

    rows_v = 2 + np.arange(3)
    if form.polar:
        # magnitudes, reference-phase angle, phase offsets
        bb.linear(rows_v, T1, 1.0).linear(rows_v, D1, -1.0)
        bb.linear(5, T2, 1.0).linear(5, D2[0], -1.0)
        for row, ph in ((6, 1), (7, 2)):
            bb.linear(row, D2[ph], 1.0).linear(row, D2[0], -1.0)
            bb.constant(row, -PHASE_ANGLE["abc"[ph]])
    else:
        bb.quad(rows_v, T1, T1, 1.0).quad(rows_v, T2, T2, 1.0)
        bb.quad(rows_v, D1, D1, -1.0).quad(rows_v, D2, D2, -1.0)
        bb.linear(5, T2, 1.0).linear(5, D2[0], -1.0)
        for row, ph in ((6, 1), (7, 2)):
            bb.linear(row, D2[ph], 1.0)
            bb.tangent(row, D1[0], D2[0], D1[ph], PHASE_ANGLE["abc"[ph]], -1.0)
    bb.labels = ["P", "Q", "Va", "Vb", "Vc", "ang_a", "ang_b", "ang_c"]
    return mb.add_block(bb)
