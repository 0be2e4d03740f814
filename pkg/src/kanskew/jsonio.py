"""Deterministic JSON: sorted keys, floats at 17 significant digits, raw exact decimals."""

from __future__ import annotations

import json
import math
from decimal import Decimal

import numpy as np


class RawNumber(str):
    """A decimal literal emitted verbatim (used for exact dyadic coordinates)."""


def _enc(obj, indent, level):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if isinstance(obj, RawNumber):
        return str(obj)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    if isinstance(obj, Decimal):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _enc(obj[k], indent, level + 1)
                 for k in sorted(obj, key=str)]
        return "{" + pad + (sep + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + ", ".join(_enc(v, 0, level + 1) for v in obj) + "]" if not any(
            isinstance(v, (dict, list, tuple)) for v in obj) else \
            "[" + pad + (sep + pad).join(_enc(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    return _enc(obj, indent, 0) + "\n"


def loads(text):
    """Parse with Decimal floats so exact coordinates survive the round trip."""
    return json.loads(text, parse_float=Decimal)
