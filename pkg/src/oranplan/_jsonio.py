"""Canonical JSON serialization used for every file the toolkit writes.

All persisted artifacts (scenarios, assignments, plans, result bundles,
configs) share one text format: JSON with sorted keys, compact separators
and a trailing newline.  Identical in-memory values therefore serialize to
byte-identical files, which keeps seeds and regression fixtures diffable.
"""

import json
from typing import Any

import numpy as np


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into plain JSON types."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def canonical_dumps(obj: Any) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def canonical_loads(text: str) -> Any:
    return json.loads(text)


def write_json(path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(obj))


def read_json(path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return canonical_loads(fh.read())


def fmt_float(x: float) -> str:
    """Shortest round-trip decimal form, used in CSV cells."""
    if x is None:
        return ""
    return repr(float(x))
