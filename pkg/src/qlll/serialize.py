"""Canonical JSON emission: sorted keys, 17-significant-digit floats.

The standard library emitter formats floats with ``repr``, which is
shortest-round-trip but not pinned.  CLI outputs and instance files must
be byte-stable across runs and Python versions, so this module renders
JSON itself with an explicit float format.
"""

from __future__ import annotations

import hashlib
import json
import math


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite float cannot be serialized to JSON")
    return format(x, ".17g")


def _emit(obj, out) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def canonical_dumps(obj) -> str:
    """Render ``obj`` as canonical JSON text (no trailing newline)."""
    out: list[str] = []
    _emit(obj, out)
    return "".join(out)


def digest(obj) -> str:
    """Content hash of an object's canonical JSON form."""
    payload = canonical_dumps(obj).encode("utf-8")
    return "sha256:" + hashlib.sha256(payload).hexdigest()
