"""Canonical JSON writer with fixed float formatting.

Storyboard and track serialization must be byte-stable: same structure in,
same bytes out, across runs and after a load/save round trip. Floats are
written with 9 significant digits (idempotent under parse-then-format) and
dict insertion order is preserved, so writers define the field order.
"""
from __future__ import annotations

import math
from typing import Any


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite float cannot be serialized")
    if x == int(x) and abs(x) < 1e16:
        return f"{int(x)}.0"
    return format(x, ".9g")


def _write(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(_escape(obj))
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(",")
            if not isinstance(key, str):
                raise TypeError(f"non-string dict key: {key!r}")
            out.append(_escape(key))
            out.append(":")
            _write(value, out)
        out.append("}")
    else:
        raise TypeError(f"unsupported type for canonical json: {type(obj)}")


_ESCAPES = {
    '"': '\\"',
    "\\": "\\\\",
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    "\b": "\\b",
    "\f": "\\f",
}


def _escape(s: str) -> str:
    parts = ['"']
    for ch in s:
        if ch in _ESCAPES:
            parts.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            parts.append(f"\\u{ord(ch):04x}")
        else:
            parts.append(ch)
    parts.append('"')
    return "".join(parts)


def dumps(obj: Any) -> str:
    out: list[str] = []
    _write(obj, out)
    return "".join(out)


def dump_bytes(obj: Any) -> bytes:
    return (dumps(obj) + "\n").encode("utf-8")
