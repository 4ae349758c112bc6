"""Deterministic JSON text: sorted keys, fixed float precision, two-space indent."""

from __future__ import annotations

import json
import math

import numpy as np


def _float(x: float, digits: int) -> str:
    if not math.isfinite(x):
        return "null"
    if x == 0:
        return "0.0"
    text = format(x, f".{digits}g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def dumps(obj, digits: int = 17, indent: int = 2) -> str:
    parts: list[str] = []

    def emit(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                parts.append("{}")
                return
            parts.append("{\n")
            items = sorted(o.items(), key=lambda kv: str(kv[0]))
            for k, (key, val) in enumerate(items):
                parts.append(pad + json.dumps(str(key)) + ": ")
                emit(val, level + 1)
                parts.append(",\n" if k < len(items) - 1 else "\n")
            parts.append(end + "}")
        elif isinstance(o, (list, tuple, np.ndarray)):
            seq = list(o)
            if not seq:
                parts.append("[]")
                return
            if all(isinstance(v, (int, float, str, np.number, bool)) or v is None for v in seq):
                parts.append("[")
                for k, v in enumerate(seq):
                    emit(v, level + 1)
                    if k < len(seq) - 1:
                        parts.append(", ")
                parts.append("]")
                return
            parts.append("[\n")
            for k, v in enumerate(seq):
                parts.append(pad)
                emit(v, level + 1)
                parts.append(",\n" if k < len(seq) - 1 else "\n")
            parts.append(end + "]")
        elif o is None:
            parts.append("null")
        elif isinstance(o, (bool, np.bool_)):
            parts.append("true" if o else "false")
        elif isinstance(o, (int, np.integer)):
            parts.append(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            parts.append(_float(float(o), digits))
        elif isinstance(o, complex):
            emit([o.real, o.imag], level)
        elif isinstance(o, str):
            parts.append(json.dumps(o))
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(obj, 0)
    parts.append("\n")
    return "".join(parts)
