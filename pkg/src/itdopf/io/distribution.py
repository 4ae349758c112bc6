"""Native JSON schema for three-phase distribution feeders (``schema_version: 1``).

Top-level fields::

    schema_version  1
    name            feeder identifier (defaults to the file stem)
    base_kva        three-phase power base in kVA
    base_kv         line-to-neutral voltage base in kV
    source_bus      id of the substation bus (must carry phases a, b, c)
    source_vm       optional, source voltage magnitude used when the feeder
                    is solved on its own (default 1.0)
    buses           [{id, phases, v_min, v_max, gs_kw?, bs_kvar?}]
    lines           [{id, from, to, phases, length, r, x, b?, tau?, shift_deg?,
                      p_max_kw?, q_max_kvar?, angmin_deg?, angmax_deg?}]
    loads           [{id, bus, phases, p_kw, q_kvar}]
    generators      [{id, bus, phases, p_min_kw, p_max_kw, q_min_kvar,
                      q_max_kvar, cost: [c2, c1, c0], status?}]

``r`` and ``x`` are phase impedance matrices in ohm per unit length, ``b``
is the per-phase total charging susceptance in siemens per unit length.
Per-phase quantities may be given as a scalar (applied to every phase) or a
list with one entry per declared phase.
"""

from __future__ import annotations

import json
import math

import numpy as np

from ..errors import CaseSyntaxError, MissingField, SingularImpedanceBlock, UnknownBusReference
from ..network import (
    DEFAULT_ANGLE_LIMIT,
    PHASES,
    DistBus,
    DistGen,
    DistLine,
    DistLoad,
    DistributionNetwork,
    from_per_unit,
    to_per_unit,
)

SCHEMA_VERSION = 1


def _load_json(text, source):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseSyntaxError(exc.msg, exc.lineno, exc.colno, source) from exc


def _field(obj, key, where, source):
    if not isinstance(obj, dict):
        raise CaseSyntaxError(f"{where} must be an object", None, None, source)
    if key not in obj:
        raise MissingField(f"{where}: missing field {key!r}", None, None, source)
    return obj[key]


def _num(value, where, source):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CaseSyntaxError(f"{where}: expected a number, got {value!r}", None, None, source)
    return float(value)


def _per_phase(value, n, where, source, default=None):
    if value is None:
        if default is None:
            raise MissingField(f"{where}: missing", None, None, source)
        return (float(default),) * n
    if isinstance(value, list):
        if len(value) != n:
            raise CaseSyntaxError(f"{where}: expected {n} per-phase values, got {len(value)}",
                                  None, None, source)
        return tuple(
            float(default) if v is None and default is not None else _num(v, where, source)
            for v in value
        )
    return (_num(value, where, source),) * n


def _phases(obj, where, source):
    ph = obj.get("phases", list(PHASES))
    if not isinstance(ph, list) or not ph or any(p not in PHASES for p in ph) or len(set(ph)) != len(ph):
        raise CaseSyntaxError(f"{where}: invalid phases {ph!r}", None, None, source)
    return tuple(ph)


def _matrix(value, n, where, source):
    if not isinstance(value, list) or len(value) != n or any(
        not isinstance(row, list) or len(row) != n for row in value
    ):
        raise CaseSyntaxError(f"{where}: expected a {n}x{n} matrix", None, None, source)
    return np.array([[_num(v, where, source) for v in row] for row in value])


def _deg(values):
    return tuple(math.radians(v) for v in values)


def parse_distribution_json(text: str, *, per_unit: bool = True, source=None, name=None) -> DistributionNetwork:
    """Parse feeder JSON into a :class:`DistributionNetwork` (per-unit by default)."""
    doc = _load_json(text, source)
    if not isinstance(doc, dict):
        raise CaseSyntaxError("feeder document must be a JSON object", None, None, source)
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise CaseSyntaxError(f"unsupported schema_version {version!r}", None, None, source)
    base_kva = _num(_field(doc, "base_kva", "feeder", source), "base_kva", source)
    base_kv = _num(_field(doc, "base_kv", "feeder", source), "base_kv", source)
    source_bus = str(_field(doc, "source_bus", "feeder", source))

    buses = []
    for k, b in enumerate(_field(doc, "buses", "feeder", source)):
        where = f"buses[{k}]"
        ph = _phases(b, where, source)
        n = len(ph)
        buses.append(
            DistBus(
                id=str(_field(b, "id", where, source)),
                phases=ph,
                v_min=_per_phase(_field(b, "v_min", where, source), n, f"{where}.v_min", source),
                v_max=_per_phase(_field(b, "v_max", where, source), n, f"{where}.v_max", source),
                gs=_per_phase(b.get("gs_kw"), n, f"{where}.gs_kw", source, 0.0),
                bs=_per_phase(b.get("bs_kvar"), n, f"{where}.bs_kvar", source, 0.0),
            )
        )
    known = {b.id for b in buses}
    if source_bus not in known:
        raise UnknownBusReference(f"source_bus {source_bus!r} is not declared", None, None, source)

    def bus_ref(obj, key, where):
        bid = str(_field(obj, key, where, source))
        if bid not in known:
            raise UnknownBusReference(f"{where}: bus {bid!r} is not declared", None, None, source)
        return bid

    lines = []
    for k, ln in enumerate(doc.get("lines", [])):
        where = f"lines[{k}]"
        ph = _phases(ln, where, source)
        n = len(ph)
        length = _num(ln.get("length", 1.0), f"{where}.length", source)
        r = _matrix(_field(ln, "r", where, source), n, f"{where}.r", source)
        x = _matrix(_field(ln, "x", where, source), n, f"{where}.x", source)
        z = (r + 1j * x) * length
        if not np.all(np.isfinite(z)) or np.linalg.cond(z) > 1e12:
            raise SingularImpedanceBlock(f"{where}: series impedance block is singular", None, None, source)
        b_sh = _per_phase(ln.get("b"), n, f"{where}.b", source, 0.0)
        lid = str(ln.get("id", f"line{k + 1}"))
        lines.append(
            DistLine(
                id=lid,
                f_bus=bus_ref(ln, "from", where),
                t_bus=bus_ref(ln, "to", where),
                phases=ph,
                y_series=np.linalg.inv(z),
                z_series=z,
                b_shunt=tuple(v * length for v in b_sh),
                tau=_per_phase(ln.get("tau"), n, f"{where}.tau", source, 1.0),
                shift=_deg(_per_phase(ln.get("shift_deg"), n, f"{where}.shift_deg", source, 0.0)),
                p_max=_per_phase(ln.get("p_max_kw"), n, f"{where}.p_max_kw", source, math.inf),
                q_max=_per_phase(ln.get("q_max_kvar"), n, f"{where}.q_max_kvar", source, math.inf),
                angmin=_deg(_per_phase(ln.get("angmin_deg"), n, f"{where}.angmin_deg", source,
                                       -math.degrees(DEFAULT_ANGLE_LIMIT))),
                angmax=_deg(_per_phase(ln.get("angmax_deg"), n, f"{where}.angmax_deg", source,
                                       math.degrees(DEFAULT_ANGLE_LIMIT))),
                length=length,
            )
        )

    loads = []
    for k, d in enumerate(doc.get("loads", [])):
        where = f"loads[{k}]"
        ph = _phases(d, where, source)
        n = len(ph)
        loads.append(
            DistLoad(
                id=str(d.get("id", f"load{k + 1}")),
                bus=bus_ref(d, "bus", where),
                phases=ph,
                pd=_per_phase(_field(d, "p_kw", where, source), n, f"{where}.p_kw", source),
                qd=_per_phase(d.get("q_kvar"), n, f"{where}.q_kvar", source, 0.0),
            )
        )

    gens = []
    for k, g in enumerate(doc.get("generators", [])):
        where = f"generators[{k}]"
        ph = _phases(g, where, source)
        n = len(ph)
        cost = g.get("cost", [0.0, 0.0, 0.0])
        if not isinstance(cost, list) or not 1 <= len(cost) <= 3:
            raise CaseSyntaxError(f"{where}.cost: expected [c2, c1, c0]", None, None, source)
        cost = [0.0] * (3 - len(cost)) + [_num(c, f"{where}.cost", source) for c in cost]
        gens.append(
            DistGen(
                id=str(g.get("id", f"gen{k + 1}")),
                bus=bus_ref(g, "bus", where),
                phases=ph,
                p_min=_per_phase(g.get("p_min_kw"), n, f"{where}.p_min_kw", source, 0.0),
                p_max=_per_phase(_field(g, "p_max_kw", where, source), n, f"{where}.p_max_kw", source),
                q_min=_per_phase(g.get("q_min_kvar"), n, f"{where}.q_min_kvar", source, 0.0),
                q_max=_per_phase(g.get("q_max_kvar"), n, f"{where}.q_max_kvar", source, 0.0),
                cost=tuple(cost),
                in_service=bool(g.get("status", 1)),
            )
        )

    label = name or doc.get("name")
    if not label:
        label = str(source).replace("\\", "/").rsplit("/", 1)[-1].removesuffix(".json") if source else "feeder"
    net = DistributionNetwork(
        base_kva=base_kva,
        base_kv=base_kv,
        buses=tuple(buses),
        lines=tuple(lines),
        loads=tuple(loads),
        generators=tuple(gens),
        source_bus=source_bus,
        name=str(label),
        per_unit=False,
        source_vm=_num(doc.get("source_vm", 1.0), "source_vm", source),
    )
    return to_per_unit(net) if per_unit else net


def _jnum(x):
    if math.isinf(x):
        return None
    return float(x)


def _list(values):
    return [_jnum(v) for v in values]


def distribution_document(net: DistributionNetwork) -> dict:
    raw = from_per_unit(net)
    lines = []
    for ln in raw.lines:
        entry = {
            "id": ln.id,
            "from": ln.f_bus,
            "to": ln.t_bus,
            "phases": list(ln.phases),
            "length": ln.length,
            "r": (ln.z_series.real / ln.length).tolist(),
            "x": (ln.z_series.imag / ln.length).tolist(),
            "b": [v / ln.length for v in ln.b_shunt],
            "tau": list(ln.tau),
            "shift_deg": [math.degrees(v) for v in ln.shift],
            "angmin_deg": [math.degrees(v) for v in ln.angmin],
            "angmax_deg": [math.degrees(v) for v in ln.angmax],
        }
        if any(math.isfinite(v) for v in ln.p_max):
            entry["p_max_kw"] = _list(ln.p_max)
        if any(math.isfinite(v) for v in ln.q_max):
            entry["q_max_kvar"] = _list(ln.q_max)
        lines.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "name": raw.name,
        "base_kva": raw.base_kva,
        "base_kv": raw.base_kv,
        "source_bus": raw.source_bus,
        "source_vm": raw.source_vm,
        "buses": [
            {"id": b.id, "phases": list(b.phases), "v_min": list(b.v_min), "v_max": list(b.v_max),
             "gs_kw": list(b.gs), "bs_kvar": list(b.bs)}
            for b in raw.buses
        ],
        "lines": lines,
        "loads": [
            {"id": d.id, "bus": d.bus, "phases": list(d.phases), "p_kw": list(d.pd), "q_kvar": list(d.qd)}
            for d in raw.loads
        ],
        "generators": [
            {"id": g.id, "bus": g.bus, "phases": list(g.phases), "p_min_kw": list(g.p_min),
             "p_max_kw": list(g.p_max), "q_min_kvar": list(g.q_min), "q_max_kvar": list(g.q_max),
             "cost": list(g.cost), "status": int(g.in_service)}
            for g in raw.generators
        ],
    }


def write_distribution_json(net: DistributionNetwork) -> str:
    return json.dumps(distribution_document(net), indent=2) + "\n"
