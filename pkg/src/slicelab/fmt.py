"""Deterministic JSON/CSV emission with 17 significant digits."""
from __future__ import annotations

import math

import numpy as np


def num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _json(obj, indent, level) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return _string(obj)
    if isinstance(obj, (bool, int, float, np.bool_, np.integer, np.floating)):
        return num(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_string(str(k))}: {_json(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _string(s: str) -> str:
    import json
    return json.dumps(s)


def dumps(obj, indent: int = 2) -> str:
    return _json(obj, indent, 0) + "\n"


def csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(num(v) for v in row))
    return "\n".join(lines) + "\n"
