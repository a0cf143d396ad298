"""Backend interfaces and request/response codecs for the six model roles."""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..dataset_io import rle_decode, rle_encode
from ..errors import InvalidRequest
from ..metadata import FrameMask

ROLES = ("describer", "text_llm", "detector", "tracker", "referrer", "embedder", "scene_detector")
MODES = ("stub", "replay", "remote")

ROLE_OPS = {
    "describer": "describe",
    "text_llm": "generate",
    "detector": "detect",
    "tracker": "track",
    "referrer": "refer",
    "embedder": "embed",
    "scene_detector": "scenes",
}


@dataclass(frozen=True)
class Detection:
    label: str
    box: tuple[float, float, float, float]
    score: float

    def as_obj(self) -> dict:
        return {"label": self.label, "box": list(self.box), "score": float(self.score)}

    @staticmethod
    def from_obj(obj: dict) -> "Detection":
        return Detection(obj["label"], tuple(float(v) for v in obj["box"]), float(obj["score"]))


@dataclass(frozen=True)
class BackendConfig:
    role: str
    mode: str
    endpoint: Optional[str] = None
    seed: int = 0
    timeout_s: float = 10.0
    max_retries: int = 3
    backoff_s: float = 0.5
    fixture_dir: Optional[str] = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise InvalidRequest(f"unknown role '{self.role}'")
        if self.mode not in MODES:
            raise InvalidRequest(f"unknown mode '{self.mode}'")
        if self.mode == "remote" and not self.endpoint:
            raise InvalidRequest(f"remote mode for role '{self.role}' requires an endpoint")
        if self.mode == "replay" and not self.fixture_dir:
            raise InvalidRequest(f"replay mode for role '{self.role}' requires a fixture dir")
        if self.timeout_s <= 0:
            raise InvalidRequest("timeout_s must be positive")


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    """Intersection-over-union of two (x0, y0, x1, y1) boxes."""
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0.0, ix1 - ix0) * max(0.0, iy1 - iy0)
    if inter <= 0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


class Backend(abc.ABC):
    """One implementation of all seven model operations.

    A backend instance serves a single wire mode (stub, replay or remote);
    the gateway maps roles onto backends.
    """

    @abc.abstractmethod
    def describe_video(
        self,
        video_id: str,
        prompt: str,
        frame_indexes: Optional[Sequence[int]] = None,
        clip: Optional[tuple[float, float]] = None,
    ) -> str: ...

    @abc.abstractmethod
    def generate_text(self, prompt: str, schema_hint: Optional[str] = None) -> str: ...

    @abc.abstractmethod
    def detect(self, video_id: str, frame_index: int, labels: Sequence[str]) -> list[Detection]: ...

    @abc.abstractmethod
    def track(
        self, video_id: str, frame_indexes: Sequence[int], seed_boxes: Sequence[Detection]
    ) -> list[list[FrameMask]]: ...

    @abc.abstractmethod
    def resolve_reference(
        self, video_id: str, frame_index: int, boxes: Sequence[Detection], referring: str
    ) -> list[int]: ...

    @abc.abstractmethod
    def embed_frames(
        self, video_id: str, frame_indexes: Sequence[int], rate_fps: float = 3.0
    ) -> np.ndarray: ...

    @abc.abstractmethod
    def detect_scene_changes(self, video_id: str, threshold: float) -> list[float]: ...


def check_describe_args(video_id: str, prompt: str) -> None:
    if not video_id:
        raise InvalidRequest("describe: empty video reference")
    if not prompt:
        raise InvalidRequest("describe: empty prompt")


def check_generate_args(prompt: str) -> None:
    if not prompt:
        raise InvalidRequest("generate: empty prompt")


def check_detect_args(labels: Sequence[str]) -> None:
    if not labels:
        raise InvalidRequest("detect: empty label set")


def check_track_args(frame_indexes: Sequence[int], seed_boxes: Sequence[Detection]) -> None:
    if not frame_indexes:
        raise InvalidRequest("track: empty frame sequence")
    if not seed_boxes:
        raise InvalidRequest("track: empty seed boxes")


def check_refer_args(boxes: Sequence[Detection]) -> None:
    if not boxes:
        raise InvalidRequest("refer: empty candidate boxes")


def check_embed_args(frame_indexes: Sequence[int]) -> None:
    if not frame_indexes:
        raise InvalidRequest("embed: no frames")


def check_scenes_args(threshold: float) -> None:
    if threshold <= 0:
        raise InvalidRequest("scenes: threshold must be positive")


# ---------------------------------------------------------------------------
# Wire codecs: typed arguments <-> request/response JSON objects
# ---------------------------------------------------------------------------

def build_request(op: str, *, seed: int = 0, **kwargs) -> dict:
    if op == "describe":
        clip = kwargs.get("clip")
        return {
            "video_id": kwargs["video_id"],
            "prompt": kwargs["prompt"],
            "frame_indexes": list(kwargs["frame_indexes"]) if kwargs.get("frame_indexes") is not None else None,
            "clip": {"start_s": clip[0], "end_s": clip[1]} if clip is not None else None,
            "seed": seed,
        }
    if op == "generate":
        return {"prompt": kwargs["prompt"], "schema_hint": kwargs.get("schema_hint"), "seed": seed}
    if op == "detect":
        return {
            "video_id": kwargs["video_id"],
            "frame_index": int(kwargs["frame_index"]),
            "labels": sorted(kwargs["labels"]),
        }
    if op == "track":
        return {
            "video_id": kwargs["video_id"],
            "frame_indexes": [int(i) for i in kwargs["frame_indexes"]],
            "seed_boxes": [d.as_obj() for d in kwargs["seed_boxes"]],
        }
    if op == "refer":
        return {
            "video_id": kwargs["video_id"],
            "frame_index": int(kwargs["frame_index"]),
            "boxes": [d.as_obj() for d in kwargs["boxes"]],
            "referring": kwargs["referring"],
        }
    if op == "embed":
        return {
            "video_id": kwargs["video_id"],
            "frame_indexes": [int(i) for i in kwargs["frame_indexes"]],
            "rate_fps": float(kwargs.get("rate_fps", 3.0)),
            "seed": seed,
        }
    if op == "scenes":
        return {"video_id": kwargs["video_id"], "threshold": float(kwargs["threshold"])}
    raise InvalidRequest(f"unknown op '{op}'")


def value_to_response(op: str, value) -> dict:
    if op in ("describe", "generate"):
        return {"text": value}
    if op == "detect":
        return {"detections": [d.as_obj() for d in value]}
    if op == "track":
        tracks = []
        for masks in value:
            size = list(masks[0].mask.shape) if masks else [1, 1]
            tracks.append(
                {
                    "size": size,
                    "masks": [
                        {"frame_index": fm.frame_index, "counts": rle_encode(fm.mask)}
                        for fm in masks
                    ],
                }
            )
        return {"tracks": tracks}
    if op == "refer":
        return {"indexes": [int(i) for i in value]}
    if op == "embed":
        return {"vectors": [[float(x) for x in row] for row in np.asarray(value)]}
    if op == "scenes":
        return {"cuts_s": [float(t) for t in value]}
    raise InvalidRequest(f"unknown op '{op}'")


def dispatch_request(backend: "Backend", op: str, request: dict):
    """Invoke a typed backend method from a wire request object.

    This is the in-process shim that lets stub backends run the same
    conformance suite a live HTTP service runs.
    """
    if op == "describe":
        clip = request.get("clip")
        return backend.describe_video(
            request["video_id"],
            request["prompt"],
            frame_indexes=request.get("frame_indexes"),
            clip=(clip["start_s"], clip["end_s"]) if clip else None,
        )
    if op == "generate":
        return backend.generate_text(request["prompt"], schema_hint=request.get("schema_hint"))
    if op == "detect":
        return backend.detect(request["video_id"], request["frame_index"], request["labels"])
    if op == "track":
        seeds = [Detection.from_obj(d) for d in request["seed_boxes"]]
        return backend.track(request["video_id"], request["frame_indexes"], seeds)
    if op == "refer":
        boxes = [Detection.from_obj(d) for d in request["boxes"]]
        return backend.resolve_reference(
            request["video_id"], request["frame_index"], boxes, request["referring"]
        )
    if op == "embed":
        return backend.embed_frames(
            request["video_id"], request["frame_indexes"], request.get("rate_fps", 3.0)
        )
    if op == "scenes":
        return backend.detect_scene_changes(request["video_id"], request["threshold"])
    raise InvalidRequest(f"unknown op '{op}'")


def response_to_value(op: str, body: dict):
    if op in ("describe", "generate"):
        return body["text"]
    if op == "detect":
        return [Detection.from_obj(d) for d in body["detections"]]
    if op == "track":
        out = []
        for track in body["tracks"]:
            h, w = track["size"]
            out.append(
                [FrameMask(m["frame_index"], rle_decode(m["counts"], (h, w))) for m in track["masks"]]
            )
        return out
    if op == "refer":
        return [int(i) for i in body["indexes"]]
    if op == "embed":
        return np.asarray(body["vectors"], dtype=np.float64)
    if op == "scenes":
        return [float(t) for t in body["cuts_s"]]
    raise InvalidRequest(f"unknown op '{op}'")
