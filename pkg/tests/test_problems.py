import dataclasses

import numpy as np
import pytest

from itdopf.nlp import Status
from itdopf.problems import (
    ITDCase,
    Setpoints,
    attach_feeders,
    build_opfitd,
    compare,
    scale_sweep,
    solve_independent,
    solve_opfitd,
    solve_pfitd,
)

from conftest import AC_FORMS, FORMS, solved
from nets import two_bus
from oracles import two_bus_newton


def test_transmission_only_case(case5):
    t = ITDCase.build(case5.transmission)
    im = build_opfitd(t, "acp")
    assert not t.links and not im.link_blocks
    assert t.node_count() == len(case5.transmission.buses)
    assert not any(b.owner == "boundary" for b in im.nlp.blocks)


def test_nfa_omits_voltages(case5):
    im = build_opfitd(case5, "nfa")
    r = solved(case5, "nfa-nfau")
    assert all("vm" not in b for b in r.transmission["buses"])
    assert im.nlp.is_affine()


@pytest.mark.parametrize("form", FORMS)
def test_unloaded_network_costs_nothing(form):
    r = solve_opfitd(ITDCase.build(two_bus(pd=0.0)), form)
    assert r.status is Status.OPTIMAL
    # zero within solver tolerance: a few 1e-6 pu of losses at 14 $/MWh
    assert abs(r.objective) <= 1e-2
    assert all(abs(g["pg_mw"]) < 1e-3 for g in r.transmission["generators"])


@pytest.mark.parametrize("form", FORMS)
def test_boundary_closure_and_cost_split(case5, form):
    r = solved(case5, form)
    assert r.optimal
    assert r.max_boundary_residual() <= 1e-6
    total = r.trans_cost + sum(r.feeder_costs.values())
    assert total == pytest.approx(r.objective, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("form", AC_FORMS)
def test_power_flow_reproduces_opf_point(case5, form):
    opf = solved(case5, form)
    pf = solve_pfitd(case5, form, opf.setpoints())
    assert pf.status is Status.OPTIMAL
    for a, b in zip(opf.transmission["buses"], pf.transmission["buses"]):
        assert b["vm"] == pytest.approx(a["vm"], abs=1e-5)
        assert b["va_deg"] == pytest.approx(a["va_deg"], abs=1e-3)


def test_power_flow_from_result_document(case5):
    opf = solved(case5, "acp-acpu")
    sp = Setpoints.from_document(opf.to_document())
    pf = solve_pfitd(case5, "acp", sp)
    assert pf.status is Status.OPTIMAL


def test_power_flow_infeasible_setpoints(case5):
    # dispatch taken from the AC optimum violates an NFA lower bound
    sp = solved(case5, "acp-acpu").setpoints()
    sp = dataclasses.replace(sp, trans_pg={k: v - 100.0 for k, v in sp.trans_pg.items()})
    pf = solve_pfitd(case5, "nfa", sp)
    assert pf.status is Status.INFEASIBLE


@pytest.mark.parametrize("form", ["acp", "acr", "ivr"])
def test_two_bus_power_flow_matches_newton(form):
    r, x, bc, pd, qd = 0.02, 0.08, 0.04, 0.6, 0.25
    net = two_bus(r=r, x=x, b_charge=bc, pd=pd, qd=qd)
    pf = solve_pfitd(ITDCase.build(net), form, Setpoints(trans_vm={1: 1.0}))
    assert pf.status is Status.OPTIMAL
    vm, va = two_bus_newton(r, x, bc, pd, qd)
    bus2 = pf.transmission["buses"][1]
    ref = pf.transmission["buses"][0]
    assert bus2["vm"] == pytest.approx(vm, abs=1e-8)
    assert np.radians(bus2["va_deg"] - ref["va_deg"]) == pytest.approx(va, abs=1e-8)


def test_full_reserve_idles_distributed_generation(case5):
    assert case5.has_dg()
    res = solve_independent(case5, "acp", reserve_fraction=1.0)
    assert res.optimal
    for f in res.feeders:
        assert all(abs(p) <= 1e-6 for kw in f.dg_kw.values() for p in kw)
        assert f.dg_cost == pytest.approx(0.0, abs=1e-6)


def test_independent_total_is_sum_of_parts(case5):
    res = solve_independent(case5, "acp", reserve_fraction=0.1)
    assert res.optimal
    parts = res.transmission_cost + sum(f.dg_cost for f in res.feeders)
    assert res.total_cost == pytest.approx(parts, rel=1e-12)
    assert res.total_iterations == res.transmission.iterations + sum(f.solution.iterations for f in res.feeders)


def test_reserve_fraction_range(case5):
    with pytest.raises(ValueError):
        solve_independent(case5, "acp", reserve_fraction=1.5)


def test_compare_difference_identity(case5):
    table = compare(case5, ["acp", "nfa"])
    assert [r.formulation.value for r in table.rows] == ["acp-acpu", "nfa-nfau"]
    for row in table.rows:
        assert not row.failed
        assert row.difference == pytest.approx(row.independent.cost - row.itd.cost, abs=1e-12)
    lines = table.to_csv().splitlines()
    assert len(lines) == 3 and lines[0].startswith("formulation,mode,cost_usd_per_hr")


def test_sweep_k_zero_is_transmission_alone(case5):
    feeder = case5.feeders[0]
    trans = case5.transmission
    rep = scale_sweep(trans, feeder, [2, 3], range(0, 3), "nfa")
    assert [r.k for r in rep.rows] == [0, 1, 2]
    assert rep.all_optimal and rep.nodes_additive
    alone = solve_opfitd(ITDCase.build(trans), "nfa")
    assert rep.rows[0].objective == pytest.approx(alone.objective, rel=1e-9)


def test_sweep_argument_checks(case5):
    with pytest.raises(ValueError):
        scale_sweep(case5.transmission, case5.feeders[0], [2, 2], range(1, 2), "nfa")
    with pytest.raises(ValueError):
        scale_sweep(case5.transmission, case5.feeders[0], [2], range(0, 3), "nfa")


def test_attached_clones_get_distinct_names(case5):
    c = attach_feeders(case5.transmission, case5.feeders[0], [2, 3, 4])
    names = [f.name for f in c.feeders]
    assert len(set(names)) == 3
    assert c.node_count() == len(case5.transmission.buses) + 3 * case5.feeders[0].node_count()
