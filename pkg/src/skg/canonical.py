"""Canonical JSON rendering.

Store files, merge plans, and content hashes all depend on byte-stable
output, so this module renders JSON itself instead of trusting
``json.dumps`` float formatting. Rules: object keys sorted, no
insignificant whitespace beyond single spaces after ``:`` and ``,``,
UTF-8 passthrough for non-ASCII, and numbers in fixed-point with at
most six fractional digits, trailing zeros trimmed, never in exponent
notation.
"""

from __future__ import annotations

import math
from typing import Any

_ESCAPES = {
    "\\": "\\\\",
    '"': '\\"',
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    "\b": "\\b",
    "\f": "\\f",
}


def render_number(value: int | float) -> str:
    """Render a number in canonical fixed-point form."""
    if isinstance(value, bool):  # bool is an int subclass; reject here
        raise TypeError("boolean is not a number")
    if not math.isfinite(value):
        raise ValueError(f"non-finite number: {value!r}")
    s = f"{value:.6f}"
    s = s.rstrip("0").rstrip(".")
    if s in ("", "-", "-0"):
        s = "0"
    return s


def normalize_number(value: int | float) -> float:
    """Quantize a number to its canonical decimal so equal renderings imply equal floats."""
    return float(render_number(value))


def render_text(value: str) -> str:
    out = ['"']
    for ch in value:
        esc = _ESCAPES.get(ch)
        if esc is not None:
            out.append(esc)
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def render_value(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return render_number(value)
    if isinstance(value, str):
        return render_text(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    if isinstance(value, dict):
        parts = []
        for key in sorted(value):
            if not isinstance(key, str):
                raise TypeError(f"non-text object key: {key!r}")
            parts.append(f"{render_text(key)}: {render_value(value[key])}")
        return "{" + ", ".join(parts) + "}"
    raise TypeError(f"unserializable value: {type(value).__name__}")


def render_record(record: dict) -> str:
    """One canonical JSON object, no trailing newline."""
    return render_value(record)
