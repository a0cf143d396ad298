"""Canonical serialization and deterministic seed derivation helpers.

Every file this package writes goes through :func:`canonical_json` so that
identical inputs always produce identical bytes: dict insertion order is
preserved, floats (which are always seconds in our documents) are rendered
with exactly three decimals, and no locale- or platform-dependent formatting
is involved.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any


def round_ms(seconds: float) -> float:
    """Round a seconds value to millisecond precision."""
    v = round(float(seconds), 3)
    return 0.0 if v == 0 else v


def _format_float(value: float) -> str:
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"non-finite float not serializable: {value}")
    return format(round_ms(value), ".3f")


def _write(obj: Any, out: list[str], indent: int | None, level: int) -> None:
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        sep, open_pad, close_pad = _pads(indent, level)
        out.append("[" + open_pad)
        for i, item in enumerate(obj):
            if i:
                out.append("," + sep)
            _write(item, out, indent, level + 1)
        out.append(close_pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        sep, open_pad, close_pad = _pads(indent, level)
        out.append("{" + open_pad)
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError(f"non-string key not serializable: {key!r}")
            if i:
                out.append("," + sep)
            out.append(json.dumps(key, ensure_ascii=False) + ": ")
            _write(value, out, indent, level + 1)
        out.append(close_pad + "}")
    else:
        raise TypeError(f"type not serializable: {type(obj).__name__}")


def _pads(indent: int | None, level: int) -> tuple[str, str, str]:
    if indent is None:
        return " ", "", ""
    inner = "\n" + " " * (indent * (level + 1))
    outer = "\n" + " " * (indent * level)
    return inner, inner, outer


def canonical_json(obj: Any, *, indent: int | None = None) -> str:
    """Serialize ``obj`` to deterministic JSON text (no trailing newline)."""
    out: list[str] = []
    _write(obj, out, indent, 0)
    return "".join(out)


def canonical_json_bytes(obj: Any, *, indent: int | None = None) -> bytes:
    return (canonical_json(obj, indent=indent) + "\n").encode("utf-8")


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def derive_seed(*parts: object) -> int:
    """Derive a stable 63-bit seed from arbitrary labelled parts.

    Python's built-in ``hash`` is randomized per process, so all seeded
    randomness in the pipeline flows through this instead.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
