"""Backend wire protocol: endpoint names, JSON schemas, conformance checks.

The protocol itself is documented in ``docs/PROTOCOL.md``; this module is the
executable version. Any transport (in-process stub shim, HTTP client, the
reference adapter service) is expected to validate against these schemas, and
:func:`run_conformance` is the single suite both the stubs and real services
must pass.
"""

from __future__ import annotations

import hashlib
import json
from typing import Callable

import jsonschema

from .errors import ProtocolError


def wire_json(obj) -> str:
    """Wire-level JSON: UTF-8, insertion-order keys, full-precision floats."""
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def request_digest(request: dict) -> str:
    """Fixture key: first 16 hex chars of SHA-256 over the wire JSON."""
    return hashlib.sha256(wire_json(request).encode("utf-8")).hexdigest()[:16]

ENDPOINTS = {
    "describe": "/v1/describe",
    "generate": "/v1/generate",
    "detect": "/v1/detect",
    "track": "/v1/track",
    "refer": "/v1/refer",
    "embed": "/v1/embed",
    "scenes": "/v1/scenes",
}

_BOX = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 4,
    "maxItems": 4,
}
_DETECTION = {
    "type": "object",
    "properties": {"label": {"type": "string"}, "box": _BOX, "score": {"type": "number"}},
    "required": ["label", "box", "score"],
    "additionalProperties": False,
}
_CLIP = {
    "type": "object",
    "properties": {"start_s": {"type": "number"}, "end_s": {"type": "number"}},
    "required": ["start_s", "end_s"],
    "additionalProperties": False,
}
_FRAME_MASK = {
    "type": "object",
    "properties": {
        "frame_index": {"type": "integer"},
        "counts": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
    "required": ["frame_index", "counts"],
    "additionalProperties": False,
}

REQUEST_SCHEMAS: dict[str, dict] = {
    "describe": {
        "type": "object",
        "properties": {
            "video_id": {"type": "string", "minLength": 1},
            "prompt": {"type": "string", "minLength": 1},
            "frame_indexes": {"type": ["array", "null"], "items": {"type": "integer", "minimum": 0}},
            "clip": {**_CLIP, "type": ["object", "null"]},
            "seed": {"type": "integer"},
        },
        "required": ["video_id", "prompt", "seed"],
        "additionalProperties": False,
    },
    "generate": {
        "type": "object",
        "properties": {
            "prompt": {"type": "string", "minLength": 1},
            "schema_hint": {"type": ["string", "null"]},
            "seed": {"type": "integer"},
        },
        "required": ["prompt", "seed"],
        "additionalProperties": False,
    },
    "detect": {
        "type": "object",
        "properties": {
            "video_id": {"type": "string", "minLength": 1},
            "frame_index": {"type": "integer", "minimum": 0},
            "labels": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        },
        "required": ["video_id", "frame_index", "labels"],
        "additionalProperties": False,
    },
    "track": {
        "type": "object",
        "properties": {
            "video_id": {"type": "string", "minLength": 1},
            "frame_indexes": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            "seed_boxes": {"type": "array", "items": _DETECTION, "minItems": 1},
        },
        "required": ["video_id", "frame_indexes", "seed_boxes"],
        "additionalProperties": False,
    },
    "refer": {
        "type": "object",
        "properties": {
            "video_id": {"type": "string", "minLength": 1},
            "frame_index": {"type": "integer", "minimum": 0},
            "boxes": {"type": "array", "items": _DETECTION, "minItems": 1},
            "referring": {"type": "string", "minLength": 1},
        },
        "required": ["video_id", "frame_index", "boxes", "referring"],
        "additionalProperties": False,
    },
    "embed": {
        "type": "object",
        "properties": {
            "video_id": {"type": "string", "minLength": 1},
            "frame_indexes": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            "rate_fps": {"type": "number", "exclusiveMinimum": 0},
            "seed": {"type": "integer"},
        },
        "required": ["video_id", "frame_indexes", "seed"],
        "additionalProperties": False,
    },
    "scenes": {
        "type": "object",
        "properties": {
            "video_id": {"type": "string", "minLength": 1},
            "threshold": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["video_id", "threshold"],
        "additionalProperties": False,
    },
}

RESPONSE_SCHEMAS: dict[str, dict] = {
    "describe": {
        "type": "object",
        "properties": {"text": {"type": "string"}},
        "required": ["text"],
        "additionalProperties": False,
    },
    "generate": {
        "type": "object",
        "properties": {"text": {"type": "string"}},
        "required": ["text"],
        "additionalProperties": False,
    },
    "detect": {
        "type": "object",
        "properties": {"detections": {"type": "array", "items": _DETECTION}},
        "required": ["detections"],
        "additionalProperties": False,
    },
    "track": {
        "type": "object",
        "properties": {
            "tracks": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "size": {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 1},
                            "minItems": 2,
                            "maxItems": 2,
                        },
                        "masks": {"type": "array", "items": _FRAME_MASK},
                    },
                    "required": ["size", "masks"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["tracks"],
        "additionalProperties": False,
    },
    "refer": {
        "type": "object",
        "properties": {"indexes": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
        "required": ["indexes"],
        "additionalProperties": False,
    },
    "embed": {
        "type": "object",
        "properties": {
            "vectors": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
        },
        "required": ["vectors"],
        "additionalProperties": False,
    },
    "scenes": {
        "type": "object",
        "properties": {"cuts_s": {"type": "array", "items": {"type": "number"}}},
        "required": ["cuts_s"],
        "additionalProperties": False,
    },
}


def validate_request(op: str, body: dict) -> None:
    try:
        jsonschema.validate(body, REQUEST_SCHEMAS[op])
    except jsonschema.ValidationError as exc:
        raise ProtocolError(f"invalid {op} request: {exc.message}") from exc


def validate_response(op: str, body: dict) -> None:
    try:
        jsonschema.validate(body, RESPONSE_SCHEMAS[op])
    except jsonschema.ValidationError as exc:
        raise ProtocolError(f"invalid {op} response: {exc.message}") from exc


def conformance_requests(video_id: str = "vid0") -> dict[str, dict]:
    """Canonical request per endpoint, used by the shared conformance suite."""
    box = [4.0, 4.0, 24.0, 32.0]
    det = {"label": "person", "box": box, "score": 0.9}
    return {
        "describe": {
            "video_id": video_id,
            "prompt": "Describe the visible activity.",
            "frame_indexes": [0, 1],
            "clip": None,
            "seed": 7,
        },
        "generate": {"prompt": "Reply with one word.", "schema_hint": None, "seed": 7},
        "detect": {"video_id": video_id, "frame_index": 0, "labels": ["person"]},
        "track": {"video_id": video_id, "frame_indexes": [0, 1, 2], "seed_boxes": [det]},
        "refer": {
            "video_id": video_id,
            "frame_index": 0,
            "boxes": [det],
            "referring": "person on the left",
        },
        "embed": {"video_id": video_id, "frame_indexes": [0, 1, 2], "rate_fps": 3.0, "seed": 7},
        "scenes": {"video_id": video_id, "threshold": 20.0},
    }


def run_conformance(post: Callable[[str, dict], dict], video_id: str = "vid0") -> dict[str, dict]:
    """Run every endpoint through ``post(op, request) -> response`` and validate.

    Raises ProtocolError on the first schema violation; returns the responses
    keyed by op on success. ``post`` may target an in-process stub shim or a
    live HTTP service; the suite is transport-agnostic on purpose.
    """
    responses = {}
    for op, request in conformance_requests(video_id).items():
        validate_request(op, request)
        response = post(op, request)
        validate_response(op, response)
        responses[op] = response
    return responses
