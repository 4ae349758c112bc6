"""Boundary-link JSON: an array of ``{transmission_boundary, distribution_boundary,
distribution_file}`` records, optionally with ``distribution_network``.

When ``distribution_network`` is absent the link refers to the feeder named
after the stem of ``distribution_file``.
"""

from __future__ import annotations

import json
from pathlib import PurePath

from ..errors import CaseSyntaxError, MissingField
from ..network import BoundaryLink, BoundarySpec

_FIELDS = ("transmission_boundary", "distribution_boundary", "distribution_file")


def feeder_key(distribution_file: str) -> str:
    return PurePath(distribution_file.replace("\\", "/")).stem


def parse_boundary_json(text: str, *, source=None) -> BoundarySpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseSyntaxError(exc.msg, exc.lineno, exc.colno, source) from exc
    if not isinstance(doc, list):
        raise CaseSyntaxError("boundary file must be a JSON array of link records", None, None, source)
    links = []
    for k, rec in enumerate(doc):
        if not isinstance(rec, dict):
            raise CaseSyntaxError(f"record {k} must be an object", None, None, source)
        for f in _FIELDS:
            if f not in rec:
                raise MissingField(f"record {k}: missing field {f!r}", None, None, source)
        tb = str(rec["transmission_boundary"]).strip()
        try:
            trans_bus = int(tb)
        except ValueError:
            raise CaseSyntaxError(
                f"record {k}: transmission_boundary {tb!r} is not an integer bus id", None, None, source
            ) from None
        dfile = str(rec["distribution_file"])
        links.append(
            BoundaryLink(
                trans_bus=trans_bus,
                dist_network=str(rec.get("distribution_network") or feeder_key(dfile)),
                dist_bus=str(rec["distribution_boundary"]),
                distribution_file=dfile,
            )
        )
    return BoundarySpec(tuple(links))


def write_boundary_json(spec: BoundarySpec) -> str:
    records = []
    for link in spec.links:
        rec = {
            "transmission_boundary": str(link.trans_bus),
            "distribution_boundary": link.dist_bus,
            "distribution_file": link.distribution_file,
        }
        if link.dist_network != feeder_key(link.distribution_file):
            rec["distribution_network"] = link.dist_network
        records.append(rec)
    return json.dumps(records, indent=2) + "\n"
