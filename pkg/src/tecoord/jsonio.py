"""Canonical JSON and CSV emission.

Reports and scenario files are diff-able artifacts: keys are sorted and
floats are printed with 17 significant digits, so identical inputs give
byte-identical files.
"""

import json

import numpy as np


def _fmt_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite float {x!r} cannot be serialized")
    return format(x, ".17g")


def _emit(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _emit(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_emit(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise TypeError(f"report keys must be strings, got {key!r}")
            items.append(f"{json.dumps(key)}: {_emit(obj[key])}")
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__} to canonical JSON")


def canonical_dumps(obj) -> str:
    """Serialize ``obj`` to deterministic JSON (sorted keys, %.17g floats)."""
    return _emit(obj) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(obj))


def write_csv(path, header, rows) -> None:
    """Write rows of numbers under a comma-separated header line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                _fmt_float(float(v)) if isinstance(v, (float, np.floating))
                else str(v)
                for v in row) + "\n")
