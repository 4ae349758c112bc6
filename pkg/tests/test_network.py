import dataclasses

import numpy as np
import pytest

from itdopf.errors import DisabledBus, DuplicateLink, PhaseMismatch, UnknownBus, ZeroImpedance
from itdopf.network import (
    BoundaryLink,
    BoundarySpec,
    TransBranch,
    derive_branch_admittance,
    resolve_boundaries,
    validate_case,
)
from itdopf.problems import ITDCase, attach_feeders, clone_feeder


def test_derived_admittance():
    g, b = derive_branch_admittance(0.01, 0.1)
    assert complex(g, b) * complex(0.01, 0.1) == pytest.approx(1.0)
    with pytest.raises(ZeroImpedance):
        TransBranch(1, 2, 0.0, 0.0)


def test_bundled_cases_validate(case5, case118):
    for case in (case5, case118):
        report = case.validate()
        assert report.ok, report.lines()


def test_validation_collects_every_violation(case5):
    t = case5.transmission
    buses = list(t.buses)
    buses[0] = dataclasses.replace(buses[0], v_min=1.2, v_max=0.9)
    gens = list(t.generators)
    gens[0] = dataclasses.replace(gens[0], p_min=5.0, p_max=1.0)
    bad = dataclasses.replace(t, buses=tuple(buses), generators=tuple(gens))
    spec = BoundarySpec((BoundaryLink(999, "feeder_ieee4", "sourcebus", "feeder_ieee4.json"),))
    report = validate_case(bad, case5.feeders, spec)
    text = "\n".join(report.lines())
    assert len(report) == 3
    assert "voltage bounds" in text and "p_min > p_max" in text and "unknown transmission bus 999" in text


def _spec(*links):
    return BoundarySpec(tuple(BoundaryLink(*l, "feeder_ieee4.json") for l in links))


def test_resolve_errors(case5):
    t, f = case5.transmission, case5.feeders
    with pytest.raises(UnknownBus, match="999"):
        resolve_boundaries(t, f, _spec((999, "feeder_ieee4", "sourcebus")))
    with pytest.raises(UnknownBus, match="nowhere"):
        resolve_boundaries(t, f, _spec((6, "feeder_ieee4", "nowhere")))
    with pytest.raises(UnknownBus):
        resolve_boundaries(t, f, _spec((6, "missing_feeder", "sourcebus")))
    with pytest.raises(PhaseMismatch):
        resolve_boundaries(t, f, _spec((6, "feeder_ieee4", "2")))
    two = (f[0], dataclasses.replace(f[0], name="other"))
    with pytest.raises(DuplicateLink):
        resolve_boundaries(t, two, _spec((6, "feeder_ieee4", "sourcebus"), (6, "other", "sourcebus")))
    buses = tuple(dataclasses.replace(b, in_service=False) if b.id == 6 else b for b in t.buses)
    with pytest.raises(DisabledBus):
        resolve_boundaries(dataclasses.replace(t, buses=buses), f, _spec((6, "feeder_ieee4", "sourcebus")))


def test_link_factor(case5):
    (link,) = case5.links
    assert link.factor == pytest.approx(case5.feeders[0].base_kva / (1000 * case5.transmission.base_mva))


def test_clone_feeder_renames_everything(case5):
    f = case5.feeders[0]
    c = clone_feeder(f, 3)
    assert c.name == f"{f.name}#3"
    assert all(b.id.endswith("#3") for b in c.buses)
    assert all(l.f_bus.endswith("#3") and l.t_bus.endswith("#3") for l in c.lines)
    assert c.source_bus == f"{f.source_bus}#3"
    assert validate_case(None, [c]).ok


def test_node_count_is_additive(case118):
    t, f = case118.transmission, case118.feeders[0]
    base = ITDCase.build(t).node_count()
    for k in range(4):
        case = attach_feeders(t, f, [2, 7, 14][:k])
        assert case.node_count() == base + k * f.node_count()
    assert np.all(np.diff([attach_feeders(t, f, [2, 7, 14][:k]).node_count() for k in range(4)]) > 0)
