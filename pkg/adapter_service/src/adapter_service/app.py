"""FastAPI application exposing the /v1/* backend wire protocol.

Request shapes follow docs/PROTOCOL.md; responses are rendered through the
canonical JSON writer so recorded fixtures capture the exact bytes sent.
"""

import logging
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from pydantic import BaseModel, Field

from .canonical import request_digest, wire_json
from .scenario import ServiceConfig
from .wrappers import ROLE_FOR_OP, build_handlers

logger = logging.getLogger(__name__)

ENDPOINTS = {
    "describe": "/v1/describe",
    "generate": "/v1/generate",
    "detect": "/v1/detect",
    "track": "/v1/track",
    "refer": "/v1/refer",
    "embed": "/v1/embed",
    "scenes": "/v1/scenes",
}


class ClipWindow(BaseModel):
    start_s: float
    end_s: float


class DetectionBody(BaseModel):
    label: str
    box: list[float] = Field(min_length=4, max_length=4)
    score: float


class DescribeRequest(BaseModel):
    video_id: str = Field(min_length=1)
    prompt: str = Field(min_length=1)
    frame_indexes: Optional[list[int]] = None
    clip: Optional[ClipWindow] = None
    seed: int = 0


class GenerateRequest(BaseModel):
    prompt: str = Field(min_length=1)
    schema_hint: Optional[str] = None
    seed: int = 0


class DetectRequest(BaseModel):
    video_id: str = Field(min_length=1)
    frame_index: int = Field(ge=0)
    labels: list[str] = Field(min_length=1)


class TrackRequest(BaseModel):
    video_id: str = Field(min_length=1)
    frame_indexes: list[int] = Field(min_length=1)
    seed_boxes: list[DetectionBody] = Field(min_length=1)


class ReferRequest(BaseModel):
    video_id: str = Field(min_length=1)
    frame_index: int = Field(ge=0)
    boxes: list[DetectionBody] = Field(min_length=1)
    referring: str = Field(min_length=1)


class EmbedRequest(BaseModel):
    video_id: str = Field(min_length=1)
    frame_indexes: list[int] = Field(min_length=1)
    rate_fps: float = Field(default=3.0, gt=0)
    seed: int = 0


class ScenesRequest(BaseModel):
    video_id: str = Field(min_length=1)
    threshold: float = Field(gt=0)


_REQUEST_MODELS = {
    "describe": DescribeRequest,
    "generate": GenerateRequest,
    "detect": DetectRequest,
    "track": TrackRequest,
    "refer": ReferRequest,
    "embed": EmbedRequest,
    "scenes": ScenesRequest,
}


def _canonical_request(op: str, model: BaseModel) -> dict:
    """Re-serialize the validated request in protocol field order."""
    obj = model.model_dump()
    ordered_fields = list(_REQUEST_MODELS[op].model_fields)
    return {k: obj[k] for k in ordered_fields}


def create_app(config: ServiceConfig, record_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="model-adapter-service", version="0.1.0")
    handlers = build_handlers(config)
    record_root = Path(record_dir) if record_dir else None
    # Requests are handled concurrently (sync endpoints run in the thread
    # pool) but each role's model is invoked one call at a time.
    role_locks = {op: threading.Lock() for op in ENDPOINTS}

    @app.exception_handler(RequestValidationError)
    async def on_invalid(request: Request, exc: RequestValidationError):
        return Response(
            content=wire_json({"error": str(exc.errors()[:1])}),
            status_code=400,
            media_type="application/json",
        )

    def register(op: str):
        model_cls = _REQUEST_MODELS[op]

        def endpoint(body: model_cls):  # type: ignore[valid-type]
            handler = handlers[op]
            if handler is None:
                role = ROLE_FOR_OP[op]
                return Response(
                    content=wire_json({"error": f"role '{role}' disabled"}),
                    status_code=501,
                    media_type="application/json",
                )
            request_obj = _canonical_request(op, body)
            try:
                with role_locks[op]:
                    response_obj = handler(request_obj)
            except RuntimeError as exc:
                logger.exception("%s failed", op)
                return Response(
                    content=wire_json({"error": str(exc)}),
                    status_code=500,
                    media_type="application/json",
                )
            body_text = wire_json(response_obj)
            if record_root is not None:
                _record(record_root, op, request_obj, body_text)
            return Response(content=body_text, media_type="application/json")

        app.post(ENDPOINTS[op])(endpoint)

    for op in ENDPOINTS:
        register(op)

    @app.get("/healthz")
    def healthz():
        disabled = sorted(ROLE_FOR_OP[op] for op, h in handlers.items() if h is None)
        return {"status": "ok", "disabled_roles": disabled}

    return app


def _record(root: Path, op: str, request_obj: dict, body_text: str) -> None:
    path = root / op / f"{request_digest(request_obj)}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {"op": op, "request": request_obj, "status": 200, "body": body_text}
    path.write_text(wire_json(record) + "\n", encoding="utf-8")
