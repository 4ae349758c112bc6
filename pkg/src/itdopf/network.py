"""In-memory network data model.

Transmission networks are single-phase; distribution feeders are three-wire
(Kron-reduced) multi-conductor networks.  Both carry a ``per_unit`` flag: the
parsers return per-unit networks, and :func:`to_per_unit` /
:func:`from_per_unit` convert between the two representations.

Unit conventions for the raw (``per_unit=False``) representation:

* transmission powers in MW / MVAr, shunts in MW / MVAr consumed at 1 p.u.
  voltage, branch impedances already in p.u. (MATPOWER convention);
* distribution powers in kW / kvar, series admittances and charging
  susceptances in siemens, voltage base ``base_kv`` line-to-neutral.

Angles are radians everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    DisabledBus,
    DuplicateLink,
    NonPositiveBase,
    PhaseMismatch,
    UnknownBus,
    ZeroImpedance,
)

PHASES = ("a", "b", "c")
DEFAULT_ANGLE_LIMIT = math.radians(60.0)


def _frozen_array(a, dtype=None):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# --------------------------------------------------------------------------
# transmission


@dataclass(frozen=True)
class TransBus:
    id: int
    v_min: float
    v_max: float
    pd: float = 0.0
    qd: float = 0.0
    gs: float = 0.0
    bs: float = 0.0
    is_reference: bool = False
    in_service: bool = True
    # kept only so that a parsed case can be written back unchanged
    bus_type: int = 1
    vm0: float = 1.0
    va0: float = 0.0
    base_kv: float = 0.0
    area: int = 1
    zone: int = 1


def derive_branch_admittance(r: float, x: float) -> tuple[float, float]:
    """Series conductance and susceptance ``g + jb = 1 / (r + jx)``."""
    if abs(r) + abs(x) < 1e-12:
        raise ZeroImpedance(f"series impedance r={r!r}, x={x!r} is zero")
    den = r * r + x * x
    return r / den, -x / den


@dataclass(frozen=True)
class TransBranch:
    f_bus: int
    t_bus: int
    r: float
    x: float
    b_charge: float = 0.0
    tau: float = 1.0
    shift: float = 0.0
    s_max: float = math.inf
    angmin: float = -DEFAULT_ANGLE_LIMIT
    angmax: float = DEFAULT_ANGLE_LIMIT
    in_service: bool = True
    rate_b: float = 0.0
    rate_c: float = 0.0
    g: float = field(init=False, repr=False, compare=False)
    b: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        g, b = derive_branch_admittance(self.r, self.x)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class TransGen:
    bus: int
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    cost: tuple[float, float, float] = (0.0, 0.0, 0.0)
    in_service: bool = True
    pg0: float = 0.0
    qg0: float = 0.0
    vg: float = 1.0
    mbase: float = 100.0


@dataclass(frozen=True)
class TransmissionNetwork:
    base_mva: float
    buses: tuple[TransBus, ...]
    branches: tuple[TransBranch, ...]
    generators: tuple[TransGen, ...]
    name: str = "transmission"
    per_unit: bool = True

    def bus_index(self) -> dict[int, int]:
        return {b.id: k for k, b in enumerate(self.buses)}

    @property
    def reference_buses(self) -> list[int]:
        return [b.id for b in self.buses if b.is_reference]

    def active_branches(self):
        return [br for br in self.branches if br.in_service]

    def active_generators(self):
        return [g for g in self.generators if g.in_service]


# --------------------------------------------------------------------------
# distribution


@dataclass(frozen=True)
class DistBus:
    id: str
    phases: tuple[str, ...]
    v_min: tuple[float, ...]
    v_max: tuple[float, ...]
    gs: tuple[float, ...] = ()
    bs: tuple[float, ...] = ()

    def __post_init__(self):
        n = len(self.phases)
        if not self.gs:
            object.__setattr__(self, "gs", (0.0,) * n)
        if not self.bs:
            object.__setattr__(self, "bs", (0.0,) * n)


@dataclass(frozen=True, eq=False)
class DistLine:
    id: str
    f_bus: str
    t_bus: str
    phases: tuple[str, ...]
    y_series: np.ndarray
    b_shunt: tuple[float, ...] = ()
    tau: tuple[float, ...] = ()
    shift: tuple[float, ...] = ()
    p_max: tuple[float, ...] = ()
    q_max: tuple[float, ...] = ()
    angmin: tuple[float, ...] = ()
    angmax: tuple[float, ...] = ()
    length: float = 1.0
    # series impedance kept alongside its inverse for lossless writing
    z_series: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.phases)
        object.__setattr__(self, "y_series", _frozen_array(self.y_series, complex))
        if self.z_series is None:
            object.__setattr__(self, "z_series", _frozen_array(np.linalg.inv(self.y_series)))
        else:
            object.__setattr__(self, "z_series", _frozen_array(self.z_series, complex))
        defaults = {
            "b_shunt": 0.0,
            "tau": 1.0,
            "shift": 0.0,
            "p_max": math.inf,
            "q_max": math.inf,
            "angmin": -DEFAULT_ANGLE_LIMIT,
            "angmax": DEFAULT_ANGLE_LIMIT,
        }
        for name, value in defaults.items():
            if not getattr(self, name):
                object.__setattr__(self, name, (value,) * n)

    def __eq__(self, other):
        if not isinstance(other, DistLine):
            return NotImplemented
        return (
            (self.id, self.f_bus, self.t_bus, self.phases, self.b_shunt, self.tau,
             self.shift, self.p_max, self.q_max, self.angmin, self.angmax, self.length)
            == (other.id, other.f_bus, other.t_bus, other.phases, other.b_shunt, other.tau,
                other.shift, other.p_max, other.q_max, other.angmin, other.angmax, other.length)
            and np.array_equal(self.y_series, other.y_series)
        )

    __hash__ = None


@dataclass(frozen=True)
class DistLoad:
    id: str
    bus: str
    phases: tuple[str, ...]
    pd: tuple[float, ...]
    qd: tuple[float, ...]


@dataclass(frozen=True)
class DistGen:
    id: str
    bus: str
    phases: tuple[str, ...]
    p_min: tuple[float, ...]
    p_max: tuple[float, ...]
    q_min: tuple[float, ...]
    q_max: tuple[float, ...]
    cost: tuple[float, float, float] = (0.0, 0.0, 0.0)
    in_service: bool = True


@dataclass(frozen=True)
class DistributionNetwork:
    base_kva: float
    base_kv: float
    buses: tuple[DistBus, ...]
    lines: tuple[DistLine, ...]
    loads: tuple[DistLoad, ...]
    generators: tuple[DistGen, ...]
    source_bus: str
    name: str = "feeder"
    per_unit: bool = True
    source_vm: float = 1.0

    def bus_map(self) -> dict[str, DistBus]:
        return {b.id: b for b in self.buses}

    def node_count(self) -> int:
        return sum(len(b.phases) for b in self.buses)

    def active_generators(self):
        return [g for g in self.generators if g.in_service]


def impedance_base(base_kv: float, base_kva: float) -> float:
    """Ohms per p.u. for a line-to-neutral kV base and a kVA power base."""
    return base_kv * base_kv * 1000.0 / base_kva


# --------------------------------------------------------------------------
# per-unit conversion


def _scale_trans(net: TransmissionNetwork, s: float) -> TransmissionNetwork:
    buses = tuple(
        replace(b, pd=b.pd * s, qd=b.qd * s, gs=b.gs * s, bs=b.bs * s) for b in net.buses
    )
    branches = tuple(
        replace(br, s_max=br.s_max * s, rate_b=br.rate_b * s, rate_c=br.rate_c * s)
        for br in net.branches
    )
    gens = tuple(
        replace(
            g,
            p_min=g.p_min * s,
            p_max=g.p_max * s,
            q_min=g.q_min * s,
            q_max=g.q_max * s,
            pg0=g.pg0 * s,
            qg0=g.qg0 * s,
        )
        for g in net.generators
    )
    return replace(net, buses=buses, branches=branches, generators=gens)


def _mul(values, s):
    return tuple(v * s for v in values)


def _scale_dist(net: DistributionNetwork, s_pow: float, s_adm: float) -> DistributionNetwork:
    buses = tuple(replace(b, gs=_mul(b.gs, s_pow), bs=_mul(b.bs, s_pow)) for b in net.buses)
    lines = tuple(
        replace(
            ln,
            y_series=ln.y_series * s_adm,
            z_series=ln.z_series / s_adm,
            b_shunt=_mul(ln.b_shunt, s_adm),
            p_max=_mul(ln.p_max, s_pow),
            q_max=_mul(ln.q_max, s_pow),
        )
        for ln in net.lines
    )
    loads = tuple(replace(d, pd=_mul(d.pd, s_pow), qd=_mul(d.qd, s_pow)) for d in net.loads)
    gens = tuple(
        replace(
            g,
            p_min=_mul(g.p_min, s_pow),
            p_max=_mul(g.p_max, s_pow),
            q_min=_mul(g.q_min, s_pow),
            q_max=_mul(g.q_max, s_pow),
        )
        for g in net.generators
    )
    return replace(net, buses=buses, lines=lines, loads=loads, generators=gens)


def _check_base(value, what):
    if not (value > 0 and math.isfinite(value)):
        raise NonPositiveBase(f"{what} must be positive, got {value!r}")


def to_per_unit(net, base=None):
    """Return ``net`` normalized to per-unit.

    ``base`` overrides the network's own power base (MVA for transmission,
    kVA for distribution).  Networks already in per-unit are returned
    unchanged.
    """
    if isinstance(net, TransmissionNetwork):
        base = net.base_mva if base is None else base
        _check_base(base, "base_mva")
        if net.per_unit:
            return net
        return replace(_scale_trans(net, 1.0 / base), base_mva=base, per_unit=True)
    base = net.base_kva if base is None else base
    _check_base(base, "base_kva")
    _check_base(net.base_kv, "base_kv")
    if net.per_unit:
        return net
    zb = impedance_base(net.base_kv, base)
    return replace(_scale_dist(net, 1.0 / base, zb), base_kva=base, per_unit=True)


def from_per_unit(net):
    """Inverse of :func:`to_per_unit`."""
    if not net.per_unit:
        return net
    if isinstance(net, TransmissionNetwork):
        _check_base(net.base_mva, "base_mva")
        return replace(_scale_trans(net, net.base_mva), per_unit=False)
    _check_base(net.base_kva, "base_kva")
    _check_base(net.base_kv, "base_kv")
    zb = impedance_base(net.base_kv, net.base_kva)
    return replace(_scale_dist(net, net.base_kva, 1.0 / zb), per_unit=False)


# --------------------------------------------------------------------------
# boundary links


@dataclass(frozen=True)
class BoundaryLink:
    trans_bus: int
    dist_network: str
    dist_bus: str
    distribution_file: str = ""


@dataclass(frozen=True)
class BoundarySpec:
    links: tuple[BoundaryLink, ...] = ()

    def __len__(self):
        return len(self.links)

    def __iter__(self):
        return iter(self.links)


@dataclass(frozen=True)
class ResolvedLink:
    trans_bus: int
    trans_index: int
    feeder_index: int
    dist_network: str
    dist_bus: str
    factor: float
    """Distribution power base expressed in transmission p.u. (kVA / (1000 MVA))."""


def resolve_boundaries(
    trans: TransmissionNetwork,
    feeders: Sequence[DistributionNetwork],
    spec: BoundarySpec,
) -> tuple[ResolvedLink, ...]:
    bus_index = trans.bus_index()
    feeder_index = {}
    for k, f in enumerate(feeders):
        feeder_index.setdefault(f.name, k)
    seen_trans: set[int] = set()
    out = []
    for link in spec.links:
        if link.trans_bus not in bus_index:
            raise UnknownBus(f"transmission bus {link.trans_bus} does not exist in {trans.name!r}")
        tb = trans.buses[bus_index[link.trans_bus]]
        if not tb.in_service:
            raise DisabledBus(f"transmission bus {link.trans_bus} is disabled")
        if link.trans_bus in seen_trans:
            raise DuplicateLink(f"transmission bus {link.trans_bus} appears in more than one link")
        seen_trans.add(link.trans_bus)
        if link.dist_network not in feeder_index:
            raise UnknownBus(f"distribution network {link.dist_network!r} was not provided")
        fi = feeder_index[link.dist_network]
        feeder = feeders[fi]
        buses = feeder.bus_map()
        if link.dist_bus not in buses:
            raise UnknownBus(
                f"distribution bus {link.dist_bus!r} does not exist in feeder {feeder.name!r}"
            )
        if tuple(sorted(buses[link.dist_bus].phases)) != PHASES:
            raise PhaseMismatch(
                f"boundary bus {link.dist_bus!r} in {feeder.name!r} must carry phases a, b, c"
            )
        if link.dist_bus != feeder.source_bus:
            raise PhaseMismatch(
                f"boundary bus {link.dist_bus!r} is not the source bus of {feeder.name!r}"
            )
        trans_base_kva = 1000.0 * trans.base_mva
        out.append(
            ResolvedLink(
                trans_bus=link.trans_bus,
                trans_index=bus_index[link.trans_bus],
                feeder_index=fi,
                dist_network=feeder.name,
                dist_bus=link.dist_bus,
                factor=feeder.base_kva / trans_base_kva,
            )
        )
    return tuple(out)


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    component: str
    item: str
    message: str

    def __str__(self):
        return f"{self.component}: {self.item}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def lines(self) -> list[str]:
        return [str(v) for v in self.violations]


def _validate_trans(net: TransmissionNetwork, out: list):
    comp = net.name
    if not net.base_mva > 0:
        out.append(Violation(comp, "base_mva", f"base must be positive, got {net.base_mva}"))
    ids = [b.id for b in net.buses]
    if len(set(ids)) != len(ids):
        out.append(Violation(comp, "buses", "duplicate bus ids"))
    known = set(ids)
    if not any(b.is_reference for b in net.buses):
        out.append(Violation(comp, "buses", "no reference bus"))
    for b in net.buses:
        if not (0 < b.v_min <= b.v_max):
            out.append(Violation(comp, f"bus {b.id}", f"voltage bounds [{b.v_min}, {b.v_max}] invalid"))
        if not all(math.isfinite(v) for v in (b.pd, b.qd, b.gs, b.bs)):
            out.append(Violation(comp, f"bus {b.id}", "non-finite demand or shunt"))
    for k, br in enumerate(net.branches):
        name = f"branch {k + 1} ({br.f_bus}-{br.t_bus})"
        for end in (br.f_bus, br.t_bus):
            if end not in known:
                out.append(Violation(comp, name, f"endpoint bus {end} does not exist"))
        if not br.tau > 0:
            out.append(Violation(comp, name, f"tap ratio {br.tau} must be positive"))
        if not (br.angmin <= 0 <= br.angmax):
            out.append(Violation(comp, name, "angle-difference bounds must bracket zero"))
        if abs((br.g + 1j * br.b) * (br.r + 1j * br.x) - 1) > 1e-10:
            out.append(Violation(comp, name, "derived admittance inconsistent with impedance"))
    for k, g in enumerate(net.generators):
        name = f"gen {k + 1} (bus {g.bus})"
        if g.bus not in known:
            out.append(Violation(comp, name, f"bus {g.bus} does not exist"))
        if g.p_min > g.p_max:
            out.append(Violation(comp, name, "p_min > p_max"))
        if g.q_min > g.q_max:
            out.append(Violation(comp, name, "q_min > q_max"))
        if g.cost[0] < 0 or not all(math.isfinite(c) for c in g.cost):
            out.append(Violation(comp, name, "cost must be finite with c2 >= 0"))


def _validate_dist(net: DistributionNetwork, out: list):
    comp = net.name
    if not net.base_kva > 0 or not net.base_kv > 0:
        out.append(Violation(comp, "bases", "base_kva and base_kv must be positive"))
    buses = {}
    for b in net.buses:
        if b.id in buses:
            out.append(Violation(comp, f"bus {b.id}", "duplicate bus id"))
        buses[b.id] = b
        if not set(b.phases) <= set(PHASES) or len(set(b.phases)) != len(b.phases):
            out.append(Violation(comp, f"bus {b.id}", f"invalid phases {b.phases}"))
        n = len(b.phases)
        if len(b.v_min) != n or len(b.v_max) != n:
            out.append(Violation(comp, f"bus {b.id}", "voltage bounds missing for a declared phase"))
            continue
        for ph, lo, hi in zip(b.phases, b.v_min, b.v_max):
            if not (0 < lo <= hi):
                out.append(Violation(comp, f"bus {b.id}", f"phase {ph} voltage bounds [{lo}, {hi}] invalid"))
    src = buses.get(net.source_bus)
    if src is None:
        out.append(Violation(comp, "source_bus", f"source bus {net.source_bus!r} does not exist"))
    elif tuple(sorted(src.phases)) != PHASES:
        out.append(Violation(comp, "source_bus", "source bus must carry phases a, b, c"))
    for ln in net.lines:
        name = f"line {ln.id}"
        for end in (ln.f_bus, ln.t_bus):
            if end not in buses:
                out.append(Violation(comp, name, f"endpoint bus {end!r} does not exist"))
            elif not set(ln.phases) <= set(buses[end].phases):
                out.append(Violation(comp, name, f"phases {ln.phases} not present at bus {end!r}"))
        n = len(ln.phases)
        if ln.y_series.shape != (n, n):
            out.append(Violation(comp, name, f"admittance block shape {ln.y_series.shape} != ({n}, {n})"))
        elif np.max(np.abs(ln.y_series - ln.y_series.T), initial=0.0) > 1e-12 * max(
            1.0, float(np.max(np.abs(ln.y_series), initial=0.0))
        ):
            out.append(Violation(comp, name, "series admittance block is not symmetric"))
        if any(not t > 0 for t in ln.tau):
            out.append(Violation(comp, name, "tap ratios must be positive"))
        if any(not (lo <= 0 <= hi) for lo, hi in zip(ln.angmin, ln.angmax)):
            out.append(Violation(comp, name, "angle-difference bounds must bracket zero"))
    for d in net.loads:
        name = f"load {d.id}"
        if d.bus not in buses:
            out.append(Violation(comp, name, f"bus {d.bus!r} does not exist"))
        elif not set(d.phases) <= set(buses[d.bus].phases):
            out.append(Violation(comp, name, f"phases {d.phases} not present at bus {d.bus!r}"))
        if not all(math.isfinite(v) for v in d.pd + d.qd):
            out.append(Violation(comp, name, "non-finite demand"))
    for g in net.generators:
        name = f"gen {g.id}"
        if g.bus not in buses:
            out.append(Violation(comp, name, f"bus {g.bus!r} does not exist"))
        elif not set(g.phases) <= set(buses[g.bus].phases):
            out.append(Violation(comp, name, f"phases {g.phases} not present at bus {g.bus!r}"))
        if any(lo > hi for lo, hi in zip(g.p_min, g.p_max)) or any(
            lo > hi for lo, hi in zip(g.q_min, g.q_max)
        ):
            out.append(Violation(comp, name, "generator bounds out of order"))
        if g.cost[0] < 0 or not all(math.isfinite(c) for c in g.cost):
            out.append(Violation(comp, name, "cost must be finite with c2 >= 0"))


def validate_case(trans, feeders=(), spec: BoundarySpec | None = None) -> ValidationReport:
    """Collect every invariant violation in a case bundle.  Never raises."""
    out: list[Violation] = []
    if trans is not None:
        _validate_trans(trans, out)
    for f in feeders:
        _validate_dist(f, out)
    if spec is not None and trans is not None:
        bus_ids = {b.id: b for b in trans.buses}
        fmap = {f.name: f for f in feeders}
        seen = set()
        for link in spec.links:
            item = f"link {link.trans_bus}->{link.dist_network}:{link.dist_bus}"
            if link.trans_bus not in bus_ids:
                out.append(Violation("boundary", item, f"unknown transmission bus {link.trans_bus}"))
            elif not bus_ids[link.trans_bus].in_service:
                out.append(Violation("boundary", item, f"transmission bus {link.trans_bus} is disabled"))
            if link.trans_bus in seen:
                out.append(Violation("boundary", item, "duplicate transmission bus"))
            seen.add(link.trans_bus)
            feeder = fmap.get(link.dist_network)
            if feeder is None:
                out.append(Violation("boundary", item, f"unknown feeder {link.dist_network!r}"))
                continue
            bmap = feeder.bus_map()
            if link.dist_bus not in bmap:
                out.append(Violation("boundary", item, f"unknown distribution bus {link.dist_bus!r}"))
            elif tuple(sorted(bmap[link.dist_bus].phases)) != PHASES or link.dist_bus != feeder.source_bus:
                out.append(Violation("boundary", item, "boundary bus must be the three-phase source bus"))
    return ValidationReport(tuple(out))
