import dataclasses

import numpy as np
import pytest

from itdopf.errors import PhaseMismatch, UnsupportedFormulation
from itdopf.formulations import (
    Formulation,
    build_boundary,
    build_distribution,
    build_transmission,
    check_jacobians,
    fuel_cost,
    objective_min_fuel_cost,
    random_interior_points,
)
from itdopf.network import BoundaryLink, BoundarySpec
from itdopf.nlp import ModelBuilder
from itdopf.problems import ITDCase, build_opfitd
from itdopf.problems.opfitd import limit_violations

from conftest import FORMS
from nets import ABC, coupled_y, one_line_feeder, two_bus
from oracles import DistOracle, rotate


def test_formulation_parse():
    assert Formulation.parse("ACP_ACPU") is Formulation.ACP
    assert Formulation.parse("ivr") is Formulation.IVR
    with pytest.raises(UnsupportedFormulation):
        Formulation.parse("soc-socu")


def _trans_model(net, form="acp"):
    mb = ModelBuilder()
    sp = build_transmission(mb, form, net)
    return mb, sp


def test_flat_line_carries_no_active_power():
    mb, sp = _trans_model(two_bus())
    nlp = mb.build()
    x = nlp.x0.copy()
    x[sp.v1] = 1.0
    x[sp.v2] = 0.0
    x[sp.flows["p_fr"]] = 0.0
    assert nlp.block("trans.flow_p").residual(x)[0] == pytest.approx(0.0, abs=1e-15)


def test_line_charging_reactive_term():
    mb, sp = _trans_model(two_bus(b_charge=0.2))
    nlp = mb.build()
    x = nlp.x0.copy()
    x[sp.v1], x[sp.v2] = 1.0, 0.0
    x[sp.flows["q_fr"]] = 0.0
    # residual is Q_ij(V) - q_ij, so it reads off the charging term
    assert nlp.block("trans.flow_q").residual(x)[0] == pytest.approx(-0.1, abs=1e-14)


def test_uncoupled_feeder_balanced_flat_point_has_no_flow():
    f = one_line_feeder(np.diag([2 - 5j] * 3))
    mb = ModelBuilder()
    sp = build_distribution(mb, "acp", f)
    nlp = mb.build()
    x = nlp.x0.copy()
    x[sp.flows["p_fr"]] = 0.0
    x[sp.flows["p_to"]] = 0.0
    np.testing.assert_allclose(nlp.block("dist[f1].flow_p").residual(x), 0.0, atol=1e-14)


@pytest.mark.parametrize("form", ["acp", "acr"])
def test_mutually_coupled_line_matches_3x3_oracle(form):
    f = one_line_feeder(coupled_y(4), b_shunt=(1e-3, 2e-3, 1.5e-3))
    mb = ModelBuilder()
    sp = build_distribution(mb, form, f)
    nlp = mb.build()
    oracle = DistOracle(f)
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = nlp.x0 + rng.uniform(-0.2, 0.2, nlp.n)
        V = x[sp.v1] * np.exp(1j * x[sp.v2]) if form == "acp" else x[sp.v1] + 1j * x[sp.v2]
        ((sf, st),) = oracle.line_flows(V)
        res = nlp.block("dist[f1].flow_p").residual(x)
        want = np.concatenate([sf.real - x[sp.flows["p_fr"]], st.real - x[sp.flows["p_to"]]])
        np.testing.assert_allclose(res, want, atol=1e-10, rtol=0)
        res = nlp.block("dist[f1].flow_q").residual(x)
        want = np.concatenate([sf.imag - x[sp.flows["q_fr"]], st.imag - x[sp.flows["q_to"]]])
        np.testing.assert_allclose(res, want, atol=1e-10, rtol=0)


def test_feeder_generator_bound_violation_is_reported():
    # 2 kW per phase on a 1000 kVA base
    f = one_line_feeder(np.diag([2 - 5j] * 3), gen_pmax=(0.002,) * 3)
    trans = two_bus()
    link = BoundaryLink(2, "f1", "src", "f1.json")
    case = ITDCase.build(trans, [f], BoundarySpec((link,)))
    im = build_opfitd(case, "acp")
    sp = im.feeders[0]
    assert np.all(im.nlp.hi[sp.pg] == pytest.approx(0.002))
    x = im.nlp.x0.copy()
    x[sp.pg[0]] = 0.003
    msgs = limit_violations(case, im, x)
    assert any("g1" in m and "active power" in m for m in msgs)


# -- boundary -----------------------------------------------------------------

def _linked(form, factor_kva=100000.0):
    trans = two_bus()
    f = one_line_feeder(np.diag([2 - 5j] * 3), base_kva=factor_kva)
    mb = ModelBuilder()
    ts = build_transmission(mb, form, trans, boundary_buses=[2])
    ds = build_distribution(mb, form, f, boundary_buses=["src"])
    factor = f.base_kva / (1000.0 * trans.base_mva)
    (blk,) = build_boundary(mb, form, [("2:f1", ts, 0, ds, 0, factor)])
    return mb.build(), ts, ds, blk, factor


def test_boundary_power_sum():
    nlp, ts, ds, blk, factor = _linked("acp")
    assert factor == 1.0
    x = nlp.x0.copy()
    x[ds.boundary[0]["p"]] = -1.0
    x[ts.boundary[0]["p"]] = 3.0
    assert blk.residual(x)[0] == pytest.approx(0.0, abs=1e-15)


def test_acp_voltage_mapping():
    nlp, ts, ds, blk, _ = _linked("acp")
    x = nlp.x0.copy()
    t = ts.boundary[0]["nodes"][0]
    d = ds.boundary[0]["nodes"]
    x[ts.v1[t]], x[ts.v2[t]] = 1.02, 0.3
    x[ds.v1[d]] = 1.02
    x[ds.v2[d]] = 0.3 + np.radians([0.0, -120.0, 120.0])
    np.testing.assert_allclose(blk.residual(x)[2:], 0.0, atol=1e-14)
    x[ds.v2[d[2]]] += 1e-3
    assert abs(blk.residual(x)[7]) == pytest.approx(1e-3)


@pytest.mark.parametrize("form", ["acr", "ivr"])
def test_rectangular_phase_rotation(form):
    nlp, ts, ds, blk, _ = _linked(form)
    x = nlp.x0.copy()
    t = ts.boundary[0]["nodes"][0]
    d = ds.boundary[0]["nodes"]
    va = 0.8 + 0.6j
    vb, vc = rotate(va, -120.0), rotate(va, 120.0)
    assert abs(vb) == pytest.approx(1.0) and abs(vc) == pytest.approx(1.0)
    x[ts.v1[t]], x[ts.v2[t]] = va.real, va.imag
    for node, v in zip(d, (va, vb, vc)):
        x[ds.v1[node]], x[ds.v2[node]] = v.real, v.imag
    r = blk.residual(x)
    labels = blk.row_labels
    for name in ("Va", "Vb", "Vc", "ang_a", "ang_b", "ang_c"):
        assert abs(r[labels.index(name)]) < 1e-12, name


def test_boundary_phase_mismatch():
    trans = two_bus()
    f = one_line_feeder(np.diag([2 - 5j] * 3))
    mb = ModelBuilder()
    ts = build_transmission(mb, "acp", trans, boundary_buses=[2])
    ds = build_distribution(mb, "acp", f, boundary_buses=["src"])
    ds.boundary[0]["nodes"] = ds.boundary[0]["nodes"][[1, 0, 2]]
    with pytest.raises(PhaseMismatch):
        build_boundary(mb, "acp", [("x", ts, 0, ds, 0, 1.0)])


def test_polar_and_rectangular_couplers_agree():
    rng = np.random.default_rng(11)
    p_nlp, p_ts, p_ds, p_blk, _ = _linked("acp")
    r_nlp, r_ts, r_ds, r_blk, _ = _linked("acr")
    for _ in range(20):
        xp = p_nlp.x0 + rng.uniform(-0.3, 0.3, p_nlp.n)
        xr = r_nlp.x0.copy()
        for ps, rs in ((p_ts, r_ts), (p_ds, r_ds)):
            vm, va = xp[ps.v1], xp[ps.v2]
            xr[rs.v1], xr[rs.v2] = vm * np.cos(va), vm * np.sin(va)
            for key in ("p", "q"):
                xr[rs.boundary[0][key]] = xp[ps.boundary[0][key]]
        np.testing.assert_allclose(r_blk.residual(xr)[:2], p_blk.residual(xp)[:2], atol=1e-10, rtol=0)
        # at a mapped point the polar angle rows vanish iff the rectangular ones do
        xp2 = xp.copy()
        t, d = p_ts.boundary[0]["nodes"][0], p_ds.boundary[0]["nodes"]
        xp2[p_ds.v1[d]] = xp2[p_ts.v1[t]]
        xp2[p_ds.v2[d]] = xp2[p_ts.v2[t]] + np.radians([0.0, -120.0, 120.0])
        xr2 = xr.copy()
        for ps, rs in ((p_ts, r_ts), (p_ds, r_ds)):
            vm, va = xp2[ps.v1], xp2[ps.v2]
            xr2[rs.v1], xr2[rs.v2] = vm * np.cos(va), vm * np.sin(va)
        assert np.max(np.abs(p_blk.residual(xp2)[2:])) < 1e-12
        if xr2[r_ts.v1[t]] > 0.1:
            assert np.max(np.abs(r_blk.residual(xr2)[2:])) < 1e-10


# -- variable census and affinity ------------------------------------------------

@pytest.mark.parametrize("which", ["case5", "case118"])
def test_acp_transmission_variable_count(which, request):
    case = request.getfixturevalue(which)
    im = build_opfitd(case, "acp")
    ts = im.trans
    t = case.transmission
    N = sum(b.in_service for b in t.buses)
    G = len(t.active_generators())
    E = len(t.active_branches())
    L = len(case.links)
    count = len(ts.v1) + len(ts.v2) + len(ts.pg) + len(ts.qg) + sum(len(v) for v in ts.flows.values())
    count += sum(len(ent["p"]) + len(ent["q"]) for ent in ts.boundary)
    assert count == 2 * N + 2 * G + 4 * E + 2 * L


def test_nfa_has_no_voltage_and_is_affine(case5):
    im = build_opfitd(case5, "nfa")
    assert im.trans.v1 is None and all(sp.v1 is None for sp in im.feeders)
    assert not any(".v" in name for name in im.nlp.names)
    assert im.nlp.is_affine()
    rng = np.random.default_rng(2)
    for _ in range(20):
        x, y = rng.normal(size=(2, im.nlp.n))
        a = rng.uniform()
        lhs = im.nlp.constraints(a * x + (1 - a) * y)
        rhs = a * im.nlp.constraints(x) + (1 - a) * im.nlp.constraints(y)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12, rtol=0)


# -- objective ----------------------------------------------------------------------

def test_fuel_cost_linear_transmission():
    mb, sp = _trans_model(two_bus(cost=(0.0, 14.0, 0.0)))
    objective_min_fuel_cost(mb, [sp])
    nlp = mb.build()
    x = nlp.x0.copy()
    x[sp.pg] = 0.1
    assert nlp.cost(x) == pytest.approx(140.0)
    assert fuel_cost([sp], x) == pytest.approx(140.0)


def test_fuel_cost_sums_phases():
    f = one_line_feeder(np.diag([2 - 5j] * 3), gen_pmax=(1.0,) * 3, base_kva=1000.0)
    mb = ModelBuilder()
    sp = build_distribution(mb, "acp", f)
    objective_min_fuel_cost(mb, [sp])
    nlp = mb.build()
    x = nlp.x0.copy()
    x[sp.pg] = 0.01
    assert nlp.cost(x) == pytest.approx(0.75)


def test_fuel_cost_constant_terms():
    net = two_bus(cost=(0.0, 0.0, 5.0))
    gens = tuple(dataclasses.replace(net.generators[0], cost=(0.0, 0.0, 5.0)) for _ in range(3))
    net = dataclasses.replace(net, generators=gens)
    mb, sp = _trans_model(net)
    objective_min_fuel_cost(mb, [sp])
    nlp = mb.build()
    x = nlp.x0.copy()
    x[sp.pg] = 0.0
    assert nlp.cost(x) == pytest.approx(15.0)


# -- derivative checker -------------------------------------------------------------

def test_nfa_jacobian_is_exact(case5):
    im = build_opfitd(case5, "nfa")
    rep = check_jacobians(im.nlp.blocks, random_interior_points(im.nlp, 5))
    assert rep.passed
    assert rep.max_rel_error < 1e-9


@pytest.mark.parametrize("form", FORMS)
def test_jacobians_small_sample(case5, form):
    im = build_opfitd(case5, form)
    rep = check_jacobians(im.nlp.blocks, random_interior_points(im.nlp, 10, seed=5))
    assert rep.passed, "\n".join(rep.lines())


def test_tangent_pole_is_flagged_not_failed():
    nlp, ts, ds, blk, _ = _linked("acr")
    d = ds.boundary[0]["nodes"]
    # Re(v_a) -> 0: the rational form stays smooth, so nothing may fail
    x = nlp.x0.copy()
    x[ds.v1[d[0]]], x[ds.v2[d[0]]] = 1e-7, 1.0
    assert check_jacobians([blk], x).passed
    # alpha + shift next to pi/2: the b-phase row blows up and differences lose accuracy
    x = nlp.x0.copy()
    f = 0.5
    x[ds.v1[d[0]]], x[ds.v2[d[0]]] = f * np.sqrt(3.0) + 1e-9, f
    (b,) = check_jacobians([blk], x).blocks
    assert b.passed and b.ill_conditioned > 0


def test_detects_a_wrong_jacobian(case5):
    im = build_opfitd(case5, "acp")
    blk = im.nlp.block("trans.flow_p")
    bad = dataclasses.replace(blk, terms=blk.terms)
    orig = bad.jacobian

    def skewed(x, n=None):
        J = orig(x, n).tocsr(copy=True)
        J.data[0] *= 1.01
        return J

    object.__setattr__(bad, "jacobian", skewed)
    rep = check_jacobians([bad], random_interior_points(im.nlp, 1))
    assert not rep.passed
