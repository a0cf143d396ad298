"""Replay backend: serves recorded wire responses byte-for-byte."""

from __future__ import annotations

import json
from pathlib import Path

from .. import protocol
from ..errors import ProtocolError
from ..protocol import request_digest
from .base import (
    Backend,
    BackendConfig,
    build_request,
    response_to_value,
)


def fixture_path(fixture_dir: Path, op: str, request: dict) -> Path:
    return Path(fixture_dir) / op / f"{request_digest(request)}.json"


def write_fixture(fixture_dir: Path, op: str, request: dict, body_text: str, status: int = 200) -> Path:
    """Record one wire exchange; the body is stored as the exact reply text."""
    path = fixture_path(fixture_dir, op, request)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {"op": op, "request": request, "status": status, "body": body_text}
    path.write_text(protocol.wire_json(record) + "\n", encoding="utf-8")
    return path


class ReplayBackend(Backend):
    """Answers every call from fixtures recorded against a live service."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self.fixture_dir = Path(config.fixture_dir)

    def _replay(self, op: str, request: dict):
        path = fixture_path(self.fixture_dir, op, request)
        if not path.exists():
            raise ProtocolError(f"no fixture for {op} request at {path}")
        record = json.loads(path.read_text("utf-8"))
        if record.get("status", 200) != 200:
            raise ProtocolError(f"recorded {op} failure", status=record.get("status"))
        body = json.loads(record["body"])
        protocol.validate_response(op, body)
        return response_to_value(op, body)

    def replay_body(self, op: str, request: dict) -> str:
        """Raw recorded reply text, for byte-identity checks."""
        path = fixture_path(self.fixture_dir, op, request)
        if not path.exists():
            raise ProtocolError(f"no fixture for {op} request at {path}")
        return json.loads(path.read_text("utf-8"))["body"]

    def describe_video(self, video_id, prompt, frame_indexes=None, clip=None):
        request = build_request(
            "describe",
            video_id=video_id,
            prompt=prompt,
            frame_indexes=frame_indexes,
            clip=clip,
            seed=self.config.seed,
        )
        return self._replay("describe", request)

    def generate_text(self, prompt, schema_hint=None):
        request = build_request("generate", prompt=prompt, schema_hint=schema_hint, seed=self.config.seed)
        return self._replay("generate", request)

    def detect(self, video_id, frame_index, labels):
        request = build_request("detect", video_id=video_id, frame_index=frame_index, labels=labels)
        return self._replay("detect", request)

    def track(self, video_id, frame_indexes, seed_boxes):
        request = build_request(
            "track", video_id=video_id, frame_indexes=frame_indexes, seed_boxes=seed_boxes
        )
        return self._replay("track", request)

    def resolve_reference(self, video_id, frame_index, boxes, referring):
        request = build_request(
            "refer", video_id=video_id, frame_index=frame_index, boxes=boxes, referring=referring
        )
        return self._replay("refer", request)

    def embed_frames(self, video_id, frame_indexes, rate_fps=3.0):
        request = build_request(
            "embed",
            video_id=video_id,
            frame_indexes=frame_indexes,
            rate_fps=rate_fps,
            seed=self.config.seed,
        )
        return self._replay("embed", request)

    def detect_scene_changes(self, video_id, threshold):
        request = build_request("scenes", video_id=video_id, threshold=threshold)
        return self._replay("scenes", request)
