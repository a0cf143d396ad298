"""Wire JSON and request digests per docs/PROTOCOL.md.

Independent implementation of the wire-level form: insertion-order keys,
", " and ": " separators, shortest-roundtrip float rendering. The request
digest decides where a recorded fixture lands, so this must agree
byte-for-byte with any protocol client.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def wire_json(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def request_digest(request: dict) -> str:
    return hashlib.sha256(wire_json(request).encode("utf-8")).hexdigest()[:16]
