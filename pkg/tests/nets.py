"""Small hand-built networks for unit tests."""

import numpy as np

from itdopf.network import (
    DistBus,
    DistGen,
    DistLine,
    DistLoad,
    DistributionNetwork,
    TransBranch,
    TransBus,
    TransGen,
    TransmissionNetwork,
)

ABC = ("a", "b", "c")


def two_bus(r=0.01, x=0.1, b_charge=0.0, pd=0.0, qd=0.0, cost=(0.0, 14.0, 0.0), pmax=10.0, vmax=1.1):
    buses = (
        TransBus(1, 0.9, vmax, is_reference=True, bus_type=3),
        TransBus(2, 0.9, vmax, pd=pd, qd=qd),
    )
    branches = (TransBranch(1, 2, r, x, b_charge),)
    gens = (TransGen(1, 0.0, pmax, -pmax, pmax, cost),)
    return TransmissionNetwork(100.0, buses, branches, gens, name="two_bus")


def one_line_feeder(y_series, b_shunt=(0.0, 0.0, 0.0), load=None, gen_pmax=None, base_kva=1000.0,
                    cost=(0.0, 25.0, 0.0), name="f1"):
    buses = (
        DistBus("src", ABC, (0.9,) * 3, (1.1,) * 3),
        DistBus("n2", ABC, (0.9,) * 3, (1.1,) * 3),
    )
    line = DistLine("l1", "src", "n2", ABC, np.asarray(y_series, complex), b_shunt=tuple(b_shunt))
    loads = () if load is None else (DistLoad("d1", "n2", ABC, tuple(load[0]), tuple(load[1])),)
    gens = ()
    if gen_pmax is not None:
        gens = (DistGen("g1", "n2", ABC, (0.0,) * 3, tuple(gen_pmax), (-1.0,) * 3, (1.0,) * 3, cost),)
    return DistributionNetwork(base_kva, 7.2, buses, (line,), loads, gens, "src", name=name)


def coupled_y(seed=0):
    """A symmetric 3x3 series admittance with mutual terms."""
    rng = np.random.default_rng(seed)
    z = np.diag(rng.uniform(0.3, 0.6, 3) + 1j * rng.uniform(0.8, 1.2, 3))
    off = rng.uniform(0.05, 0.2, 3) + 1j * rng.uniform(0.3, 0.5, 3)
    for (i, j), v in zip(((0, 1), (0, 2), (1, 2)), off):
        z[i, j] = z[j, i] = v
    return np.linalg.inv(z)
