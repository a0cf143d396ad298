"""HTTP client for the backend wire protocol, with retries and recording."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from typing import Optional

import requests

from .. import protocol
from ..errors import InvalidRequest, ProtocolError, TransportError
from .base import Backend, BackendConfig, build_request, response_to_value
from .replay import write_fixture

logger = logging.getLogger(__name__)


class RemoteBackend(Backend):
    """POSTs JSON requests to a /v1/* service and validates every reply.

    Connection failures and timeouts retry with exponential backoff
    (base 0.5 s, factor 2); HTTP 400 maps to InvalidRequest and 5xx to
    ProtocolError without retrying. With ``record_dir`` set, successful
    exchanges are captured as replay fixtures.
    """

    def __init__(self, config: BackendConfig, record_dir: Optional[Path] = None):
        self.config = config
        self.record_dir = Path(record_dir) if record_dir else None
        self._session = requests.Session()

    def _post(self, op: str, request: dict):
        protocol.validate_request(op, request)
        url = self.config.endpoint.rstrip("/") + protocol.ENDPOINTS[op]
        last_exc: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.config.backoff_s * (2 ** (attempt - 1)))
            try:
                resp = self._session.post(url, json=request, timeout=self.config.timeout_s)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                logger.warning("%s attempt %d failed: %s", op, attempt + 1, exc)
                continue
            if resp.status_code == 400:
                raise InvalidRequest(f"{op}: {resp.text}")
            if resp.status_code >= 500:
                raise ProtocolError(f"{op}: server error {resp.status_code}", status=resp.status_code)
            if resp.status_code != 200:
                raise ProtocolError(f"{op}: unexpected status {resp.status_code}", status=resp.status_code)
            body_text = resp.text
            try:
                body = json.loads(body_text)
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"{op}: reply is not JSON ({exc})") from exc
            protocol.validate_response(op, body)
            if self.record_dir is not None:
                write_fixture(self.record_dir, op, request, body_text)
            return response_to_value(op, body)
        raise TransportError(
            f"{op}: unreachable after {self.config.max_retries + 1} attempts ({last_exc})"
        )

    def describe_video(self, video_id, prompt, frame_indexes=None, clip=None):
        return self._post(
            "describe",
            build_request(
                "describe",
                video_id=video_id,
                prompt=prompt,
                frame_indexes=frame_indexes,
                clip=clip,
                seed=self.config.seed,
            ),
        )

    def generate_text(self, prompt, schema_hint=None):
        return self._post(
            "generate",
            build_request("generate", prompt=prompt, schema_hint=schema_hint, seed=self.config.seed),
        )

    def detect(self, video_id, frame_index, labels):
        return self._post(
            "detect", build_request("detect", video_id=video_id, frame_index=frame_index, labels=labels)
        )

    def track(self, video_id, frame_indexes, seed_boxes):
        return self._post(
            "track",
            build_request("track", video_id=video_id, frame_indexes=frame_indexes, seed_boxes=seed_boxes),
        )

    def resolve_reference(self, video_id, frame_index, boxes, referring):
        return self._post(
            "refer",
            build_request(
                "refer", video_id=video_id, frame_index=frame_index, boxes=boxes, referring=referring
            ),
        )

    def embed_frames(self, video_id, frame_indexes, rate_fps=3.0):
        return self._post(
            "embed",
            build_request(
                "embed",
                video_id=video_id,
                frame_indexes=frame_indexes,
                rate_fps=rate_fps,
                seed=self.config.seed,
            ),
        )

    def detect_scene_changes(self, video_id, threshold):
        return self._post("scenes", build_request("scenes", video_id=video_id, threshold=threshold))
