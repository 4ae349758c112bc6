"""Variables, constraint blocks and objective for the four formulation pairs."""

from __future__ import annotations

import numpy as np

from .boundary import ROWS_PER_LINK, build_boundary
from .builder import NetSpace, add_generator_costs, build_network
from .common import ALL_FORMULATIONS, PHASE_ANGLE, Formulation
from .derivcheck import DerivativeReport, check_jacobians, random_interior_points
from .netdata import BranchData, GenData, NetData, distribution_data, transmission_data


def build_transmission(mb, formulation, net, boundary_buses=(), prefix="trans") -> NetSpace:
    """Transmission variables and blocks; each bus in ``boundary_buses`` gets one boundary slot."""
    data = transmission_data(net)
    index = data.node_index()
    slots = [[index[str(b)]] for b in boundary_buses]
    return build_network(mb, Formulation.parse(formulation), data, prefix, slots)


def build_distribution(mb, formulation, net, boundary_buses=(), prefix=None) -> NetSpace:
    """Feeder variables and blocks; boundary slots hold the a, b, c nodes of each listed bus."""
    data = distribution_data(net)
    index = data.node_index()
    slots = [[index[f"{b}.{ph}"] for ph in "abc"] for b in boundary_buses]
    return build_network(mb, Formulation.parse(formulation), data, prefix or f"dist[{net.name}]", slots)


def objective_min_fuel_cost(mb, spaces):
    """Add the total fuel cost of every priced generator in ``spaces`` to the model objective."""
    for sp in spaces:
        add_generator_costs(mb, sp)


def fuel_cost(spaces, x) -> float:
    """Total fuel cost in $/hr at point ``x``; feeder dispatch is summed over phases first."""
    total = 0.0
    for sp in spaces:
        for g, (p, _) in zip(sp.data.gens, sp.gen_dispatch(x)):
            if g.priced:
                c2, c1, c0 = g.cost
                mw = g.weight * float(np.sum(p))
                total += c2 * mw * mw + c1 * mw + c0
    return total


__all__ = [
    "ALL_FORMULATIONS",
    "BranchData",
    "DerivativeReport",
    "Formulation",
    "GenData",
    "NetData",
    "NetSpace",
    "PHASE_ANGLE",
    "ROWS_PER_LINK",
    "add_generator_costs",
    "build_boundary",
    "build_distribution",
    "build_network",
    "build_transmission",
    "check_jacobians",
    "distribution_data",
    "fuel_cost",
    "objective_min_fuel_cost",
    "random_interior_points",
    "transmission_data",
]
