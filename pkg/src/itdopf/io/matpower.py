"""Reader and writer for the MATPOWER ``.m`` case subset.

Only literal assignments ``mpc.<name> = <number | 'string' | [matrix]>;`` are
accepted.  Cell arrays (``{ ... };``) are skipped.  Anything that looks like
MATLAB code is rejected with a located :class:`CaseSyntaxError`.
"""

from __future__ import annotations

import math
import re

from ..errors import CaseSyntaxError, MissingSection, UnsupportedCostModel, ZeroImpedance
from ..network import (
    DEFAULT_ANGLE_LIMIT,
    TransBranch,
    TransBus,
    TransGen,
    TransmissionNetwork,
    from_per_unit,
    to_per_unit,
)

_ASSIGN = re.compile(r"mpc\.(\w+)\s*=\s*")
_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?[Ii]nf")
_REQUIRED = ("baseMVA", "bus", "gen", "branch", "gencost")
_MIN_COLS = {"bus": 13, "gen": 10, "branch": 11, "gencost": 4}


def _strip_comment(line: str) -> str:
    quoted = False
    for k, ch in enumerate(line):
        if ch == "'":
            quoted = not quoted
        elif ch == "%" and not quoted:
            return line[:k]
    return line


def _matrix(lines, start, col, source):
    """Read a bracketed matrix beginning at ``lines[start][col]`` (just after ``[``).

    Returns ``(rows, next_line_index)``.
    """
    rows: list[list[float]] = []
    row: list[float] = []
    k, c = start, col
    while k < len(lines):
        text = lines[k]
        while c < len(text):
            ch = text[c]
            if ch in " \t,\r":
                c += 1
            elif ch == ";":
                if row:
                    rows.append(row)
                    row = []
                c += 1
            elif ch == "]":
                if row:
                    rows.append(row)
                tail = text[c + 1 :].strip()
                if tail not in (";", ""):
                    raise CaseSyntaxError(
                        f"unexpected text {tail!r} after matrix", k + 1, c + 2, source
                    )
                return rows, k + 1
            else:
                m = _NUMBER.match(text, c)
                if not m:
                    raise CaseSyntaxError(
                        f"expected a number, found {text[c:c + 12]!r}", k + 1, c + 1, source
                    )
                row.append(float(m.group()))
                c = m.end()
        if row:
            rows.append(row)
            row = []
        k, c = k + 1, 0
    raise CaseSyntaxError("unterminated matrix (missing ']')", start + 1, col, source)


def _sections(text: str, source=None) -> dict:
    lines = [_strip_comment(ln) for ln in text.splitlines()]
    out: dict = {}
    k = 0
    while k < len(lines):
        raw = lines[k]
        line = raw.strip()
        if not line:
            k += 1
            continue
        if line.startswith("function"):
            fm = re.match(r"function\s+\w+\s*=\s*(\w+)\s*$", line)
            if fm:
                out.setdefault("__function__", fm.group(1))
            k += 1
            continue
        indent = len(raw) - len(raw.lstrip())
        m = _ASSIGN.match(line)
        if not m:
            raise CaseSyntaxError(f"unsupported statement {line[:40]!r}", k + 1, indent + 1, source)
        name = m.group(1)
        rest = line[m.end() :]
        col = indent + m.end()
        if rest.startswith("["):
            # offset into the raw (unstripped) line so columns stay meaningful
            rows, k = _matrix(lines, k, raw.index("[", col) + 1, source)
            out[name] = rows
            continue
        if rest.startswith("{"):
            while "}" not in lines[k]:
                k += 1
                if k >= len(lines):
                    raise CaseSyntaxError("unterminated cell array", None, None, source)
            k += 1
            continue
        value = rest.rstrip(";").strip()
        if value.startswith("'") and value.endswith("'") and len(value) >= 2:
            out[name] = value[1:-1]
        elif _NUMBER.fullmatch(value):
            out[name] = float(value)
        else:
            raise CaseSyntaxError(f"unsupported value {value!r} for mpc.{name}", k + 1, col + 1, source)
        k += 1
    return out


def _check_rows(sec, name, source):
    rows = sec[name]
    if not isinstance(rows, list):
        raise CaseSyntaxError(f"mpc.{name} must be a matrix", None, None, source)
    need = _MIN_COLS[name]
    for r, row in enumerate(rows):
        if len(row) < need:
            raise CaseSyntaxError(
                f"mpc.{name} row {r + 1} has {len(row)} columns, expected at least {need}",
                None, None, source,
            )
    return rows


def _angle_limits(row):
    if len(row) < 13:
        return -DEFAULT_ANGLE_LIMIT, DEFAULT_ANGLE_LIMIT
    lo, hi = row[11], row[12]
    if (lo == 0 and hi == 0) or lo <= -360 or hi >= 360:
        return -DEFAULT_ANGLE_LIMIT, DEFAULT_ANGLE_LIMIT
    return math.radians(lo), math.radians(hi)


def _cost(row, index, source):
    model = int(row[0])
    if model != 2:
        raise UnsupportedCostModel(
            f"generator {index + 1}: cost model {model} (only polynomial model 2 is supported)",
            None, None, source,
        )
    n = int(row[3])
    coeffs = row[4 : 4 + n]
    if n > 3 or n < 0:
        raise UnsupportedCostModel(
            f"generator {index + 1}: polynomial of degree {n - 1} (at most 2 supported)",
            None, None, source,
        )
    if len(coeffs) != n:
        raise CaseSyntaxError(f"gencost row {index + 1} lists {len(coeffs)} of {n} coefficients",
                              None, None, source)
    padded = [0.0] * (3 - n) + list(coeffs)
    return tuple(float(c) for c in padded)


def parse_matpower(text: str, *, per_unit: bool = True, source=None, name=None) -> TransmissionNetwork:
    """Parse MATPOWER case text into a :class:`TransmissionNetwork`."""
    sec = _sections(text, source)
    for req in _REQUIRED:
        if req not in sec:
            raise MissingSection(f"mpc.{req} is missing", None, None, source)
    base = sec["baseMVA"]
    if not isinstance(base, float):
        raise CaseSyntaxError("mpc.baseMVA must be a scalar", None, None, source)

    buses = []
    for row in _check_rows(sec, "bus", source):
        btype = int(row[1])
        buses.append(
            TransBus(
                id=int(row[0]),
                v_min=row[12],
                v_max=row[11],
                pd=row[2],
                qd=row[3],
                gs=row[4],
                bs=row[5],
                is_reference=btype == 3,
                in_service=btype != 4,
                bus_type=btype,
                vm0=row[7],
                va0=math.radians(row[8]),
                base_kv=row[9],
                area=int(row[6]),
                zone=int(row[10]),
            )
        )

    gen_rows = _check_rows(sec, "gen", source)
    cost_rows = _check_rows(sec, "gencost", source)
    if len(cost_rows) < len(gen_rows):
        raise MissingSection(
            f"mpc.gencost has {len(cost_rows)} rows for {len(gen_rows)} generators", None, None, source
        )
    gens = []
    for k, row in enumerate(gen_rows):
        gens.append(
            TransGen(
                bus=int(row[0]),
                p_min=row[9],
                p_max=row[8],
                q_min=row[4],
                q_max=row[3],
                cost=_cost(cost_rows[k], k, source),
                in_service=row[7] > 0,
                pg0=row[1],
                qg0=row[2],
                vg=row[5],
                mbase=row[6],
            )
        )

    branches = []
    for k, row in enumerate(_check_rows(sec, "branch", source)):
        angmin, angmax = _angle_limits(row)
        try:
            branches.append(
                TransBranch(
                    f_bus=int(row[0]),
                    t_bus=int(row[1]),
                    r=row[2],
                    x=row[3],
                    b_charge=row[4],
                    tau=row[8] if row[8] != 0 else 1.0,
                    shift=math.radians(row[9]),
                    s_max=row[5] if row[5] > 0 else math.inf,
                    rate_b=row[6],
                    rate_c=row[7],
                    in_service=row[10] > 0,
                    angmin=angmin,
                    angmax=angmax,
                )
            )
        except ZeroImpedance as exc:
            raise CaseSyntaxError(f"branch {k + 1}: {exc}", None, None, source) from exc

    label = name or sec.get("__function__") or (str(source).rsplit("/", 1)[-1].removesuffix(".m") if source else "case")
    net = TransmissionNetwork(
        base_mva=base,
        buses=tuple(buses),
        branches=tuple(branches),
        generators=tuple(gens),
        name=str(label),
        per_unit=False,
    )
    return to_per_unit(net) if per_unit else net


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_matpower(net: TransmissionNetwork) -> str:
    """Serialize a network to MATPOWER text that :func:`parse_matpower` reads back."""
    raw = from_per_unit(net)
    out = [f"function mpc = {raw.name}", "mpc.version = '2';", f"mpc.baseMVA = {_fmt(raw.base_mva)};", ""]
    out.append("%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin")
    out.append("mpc.bus = [")
    for b in raw.buses:
        vals = [b.id, b.bus_type, b.pd, b.qd, b.gs, b.bs, b.area, b.vm0, math.degrees(b.va0),
                b.base_kv, b.zone, b.v_max, b.v_min]
        out.append("\t" + "\t".join(_fmt(v) for v in vals) + ";")
    out += ["];", ""]
    out.append("%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin")
    out.append("mpc.gen = [")
    for g in raw.generators:
        vals = [g.bus, g.pg0, g.qg0, g.q_max, g.q_min, g.vg, g.mbase, int(g.in_service), g.p_max, g.p_min]
        out.append("\t" + "\t".join(_fmt(v) for v in vals) + ";")
    out += ["];", ""]
    out.append("%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax")
    out.append("mpc.branch = [")
    for br in raw.branches:
        vals = [br.f_bus, br.t_bus, br.r, br.x, br.b_charge,
                0.0 if math.isinf(br.s_max) else br.s_max, br.rate_b, br.rate_c,
                br.tau, math.degrees(br.shift), int(br.in_service),
                math.degrees(br.angmin), math.degrees(br.angmax)]
        out.append("\t" + "\t".join(_fmt(v) for v in vals) + ";")
    out += ["];", ""]
    out.append("%% 2 startup shutdown n c2 c1 c0")
    out.append("mpc.gencost = [")
    for g in raw.generators:
        vals = [2, 0, 0, 3, *g.cost]
        out.append("\t" + "\t".join(_fmt(v) for v in vals) + ";")
    out += ["];", ""]
    return "\n".join(out)
