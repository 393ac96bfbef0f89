"""Deterministic JSON rendering: fixed key order (insertion order), floats at
12 significant digits, exact rationals as "p/q" strings, infinity as "inf"."""

from __future__ import annotations

import json
import math
from fractions import Fraction


def render_value(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return json.dumps(str(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return '"inf"' if value > 0 else '"-inf"'
        if value == int(value) and abs(value) < 1e15:
            return f"{value:.1f}"
        return f"{value:.12g}"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {render_value(v)}" for k, v in value.items())
        return "{" + items + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    # numpy scalars and the like
    if hasattr(value, "item"):
        return render_value(value.item())
    raise TypeError(f"cannot render {type(value)!r}")


def render_json(value) -> str:
    return render_value(value) + "\n"
