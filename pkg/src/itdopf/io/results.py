"""Result documents: plain dicts written with a deterministic serializer."""

from __future__ import annotations

import json

from . import jsonfmt


def result_document(result) -> dict:
    if isinstance(result, dict):
        return result
    return result.to_document()


def write_result_json(result) -> str:
    """Serialize a result (or an already built document) with 17 significant digits."""
    return jsonfmt.dumps(result_document(result), digits=17)


def parse_result_json(text: str) -> dict:
    return json.loads(text)
