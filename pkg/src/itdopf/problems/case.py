"""Loading transmission, feeder and boundary files into one case bundle."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from ..errors import BoundaryError, UnknownBus
from ..io.boundary import feeder_key, parse_boundary_json
from ..io.distribution import parse_distribution_json
from ..io.matpower import parse_matpower
from ..network import (
    BoundaryLink,
    BoundarySpec,
    DistributionNetwork,
    TransmissionNetwork,
    resolve_boundaries,
    validate_case,
)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

BUNDLED = {
    "case5_ieee4": ("case5_withload.m", "case5_ieee4.json"),
    "case118_ieee4x5": ("case118.m", "case118_ieee4x5.json"),
}


@dataclass(frozen=True)
class ITDCase:
    transmission: TransmissionNetwork
    feeders: tuple
    links: tuple  # ResolvedLink
    spec: BoundarySpec = BoundarySpec(())

    @classmethod
    def build(cls, transmission, feeders=(), spec=None):
        spec = spec or BoundarySpec(())
        feeders = tuple(feeders)
        links = resolve_boundaries(transmission, feeders, spec)
        used = [l.feeder_index for l in links]
        if len(set(used)) != len(used):
            raise BoundaryError("a feeder is referenced by more than one boundary link")
        return cls(transmission, feeders, links, spec)

    @property
    def name(self):
        return self.transmission.name + "".join(f"+{f.name}" for f in self.feeders)

    def validate(self):
        return validate_case(self.transmission, self.feeders, self.spec)

    def node_count(self):
        """Transmission buses plus feeder (bus, phase) nodes."""
        nt = sum(1 for b in self.transmission.buses if b.in_service)
        return nt + sum(f.node_count() for f in self.feeders)

    def has_dg(self):
        return any(f.active_generators() for f in self.feeders)


def read_transmission(path) -> TransmissionNetwork:
    path = Path(path)
    return parse_matpower(path.read_text(), source=str(path))


def read_feeder(path, name=None) -> DistributionNetwork:
    path = Path(path)
    return parse_distribution_json(path.read_text(), source=str(path), name=name or path.stem)


def read_case_files(pm, pmd=(), boundary=None):
    """Parse the input files without resolving links.  Returns ``(trans, feeders, spec)``.

    Feeders named on the command line are keyed by file stem.  Feeder files
    mentioned only in the boundary file are read relative to it; a link
    whose ``distribution_network`` differs from the file stem gets its own
    renamed copy of that feeder.
    """
    trans = read_transmission(pm)
    by_key = {}
    for p in pmd:
        f = read_feeder(p)
        by_key[f.name] = f
    spec = BoundarySpec(())
    if boundary is not None:
        bpath = Path(boundary)
        spec = parse_boundary_json(bpath.read_text(), source=str(bpath))
        for link in spec.links:
            stem = feeder_key(link.distribution_file)
            if stem not in by_key and link.dist_network not in by_key:
                candidate = bpath.parent / link.distribution_file.replace("\\", "/")
                if candidate.exists():
                    by_key[stem] = read_feeder(candidate, stem)
    feeders = []
    linked = []
    for link in spec.links:
        stem = feeder_key(link.distribution_file)
        base = by_key.get(link.dist_network) or by_key.get(stem)
        if base is None:
            feeders_named = ", ".join(sorted(by_key)) or "none"
            raise UnknownBus(
                f"boundary link to bus {link.trans_bus} names feeder {link.dist_network!r}, "
                f"which was not loaded (loaded: {feeders_named})"
            )
        feeders.append(dataclasses.replace(base, name=link.dist_network))
        linked.append(link.dist_network)
    for key, f in by_key.items():
        if key not in linked and not any(feeder_key(l.distribution_file) == key for l in spec.links):
            feeders.append(f)
    return trans, feeders, spec


def load_case(pm, pmd=(), boundary=None) -> ITDCase:
    """Read and resolve a case; see :func:`read_case_files` for feeder lookup."""
    return ITDCase.build(*read_case_files(pm, pmd, boundary))


def bundled_case(name="case5_ieee4") -> ITDCase:
    pm, bnd = BUNDLED[name]
    return load_case(DATA_DIR / pm, (), DATA_DIR / bnd)


def bundled_paths(name="case5_ieee4"):
    pm, bnd = BUNDLED[name]
    return DATA_DIR / pm, DATA_DIR / bnd


def clone_feeder(feeder: DistributionNetwork, k: int) -> DistributionNetwork:
    """Copy of ``feeder`` with every bus id (and the network name) suffixed ``#k``."""
    sfx = f"#{k}"
    ren = lambda b: f"{b}{sfx}"  # noqa: E731
    return dataclasses.replace(
        feeder,
        name=f"{feeder.name}{sfx}",
        source_bus=ren(feeder.source_bus),
        buses=tuple(dataclasses.replace(b, id=ren(b.id)) for b in feeder.buses),
        lines=tuple(dataclasses.replace(l, f_bus=ren(l.f_bus), t_bus=ren(l.t_bus)) for l in feeder.lines),
        loads=tuple(dataclasses.replace(d, bus=ren(d.bus)) for d in feeder.loads),
        generators=tuple(dataclasses.replace(g, bus=ren(g.bus)) for g in feeder.generators),
    )


def attach_feeders(trans, template, buses) -> ITDCase:
    """Case with one clone of ``template`` linked at each transmission bus in ``buses``."""
    feeders, links = [], []
    for k, bus in enumerate(buses, start=1):
        f = clone_feeder(template, k)
        feeders.append(f)
        links.append(BoundaryLink(int(bus), f.name, f.source_bus, f"{template.name}.json"))
    return ITDCase.build(trans, feeders, BoundarySpec(tuple(links)))
