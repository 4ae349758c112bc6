"""Canonical text dumps of parsed networks, used for golden-file comparisons."""

from __future__ import annotations

import dataclasses

import numpy as np

from . import jsonfmt

DIGITS = 12


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [[_plain(v) for v in row] for row in obj.tolist()]
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dump_network(net) -> str:
    doc = {"kind": type(net).__name__, "data": _plain(net)}
    return jsonfmt.dumps(doc, digits=DIGITS)
