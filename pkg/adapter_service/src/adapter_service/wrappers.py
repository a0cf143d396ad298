"""Per-role model wrappers.

Every role ships a deterministic "canned" wrapper that serves scripted
scenario data, which is what CI-scale recording runs use. The embedder and
scene detector also offer real OpenCV implementations that operate on media
files under the configured media root. Heavier open-source model wrappers
(video describers, LLMs, detectors, trackers) plug into the same registry;
a role configured as "disabled" answers 501.
"""

from __future__ import annotations

import hashlib
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .scenario import ScenarioObject, ServiceConfig, VideoScenario

logger = logging.getLogger(__name__)

ROLE_FOR_OP = {
    "describe": "describer",
    "generate": "text_llm",
    "detect": "detector",
    "track": "tracker",
    "refer": "referrer",
    "embed": "embedder",
    "scenes": "scene_detector",
}


def _sha12(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def _seed_from(*parts) -> int:
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


def _iou(a: Sequence[float], b: Sequence[float]) -> float:
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0.0, ix1 - ix0) * max(0.0, iy1 - iy0)
    if inter <= 0:
        return 0.0
    return inter / (
        (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    )


def _rle_counts(mask: np.ndarray) -> list[int]:
    """Column-major run lengths, first run counting zeros."""
    flat = mask.ravel(order="F")
    counts: list[int] = []
    value = 0
    run = 0
    for cell in flat:
        if cell == value:
            run += 1
        else:
            counts.append(run)
            value ^= 1
            run = 1
    counts.append(run)
    return counts


def _box_mask(scenario: VideoScenario, box: Sequence[float]) -> np.ndarray:
    mask = np.zeros((scenario.height_px, scenario.width_px), dtype=np.uint8)
    x0, y0, x1, y1 = box
    xi0, yi0 = max(int(x0), 0), max(int(y0), 0)
    xi1 = min(int(np.ceil(x1)), scenario.width_px)
    yi1 = min(int(np.ceil(y1)), scenario.height_px)
    mask[yi0:max(yi1, yi0 + 1), xi0:max(xi1, xi0 + 1)] = 1
    return mask


class CannedBackend:
    """Deterministic implementations of all seven ops over scenario data."""

    def __init__(self, config: ServiceConfig):
        self.config = config

    def _scenario(self, video_id: str) -> VideoScenario:
        return self.config.videos.get(video_id, VideoScenario(video_id=video_id))

    def describe(self, request: dict) -> dict:
        scenario = self._scenario(request["video_id"])
        digest = _sha12(request["prompt"])
        reply = scenario.replies.get(digest)
        if reply is None:
            reply = (
                f"Canned description of {request['video_id']} "
                f"for prompt {digest} (seed {request.get('seed', 0)})."
            )
        return {"text": reply}

    def generate(self, request: dict) -> dict:
        digest = _sha12(request["prompt"])
        for scenario in self.config.videos.values():
            if digest in scenario.replies:
                return {"text": scenario.replies[digest]}
        return {"text": f"Canned reply for prompt {digest} (seed {request.get('seed', 0)})."}

    def detect(self, request: dict) -> dict:
        scenario = self._scenario(request["video_id"])
        labels = set(request["labels"])
        hits = [
            o
            for o in scenario.objects
            if o.label in labels and o.present_on(request["frame_index"])
        ]
        hits.sort(key=lambda o: (-o.score, o.box[0], o.box[1]))
        return {
            "detections": [
                {"label": o.label, "box": list(o.box), "score": o.score} for o in hits
            ]
        }

    def track(self, request: dict) -> dict:
        scenario = self._scenario(request["video_id"])
        frames = request["frame_indexes"]
        seed_frame = frames[0]
        candidates = [o for o in scenario.objects if o.present_on(seed_frame)]
        tracks = []
        for seed in request["seed_boxes"]:
            best: Optional[ScenarioObject] = None
            best_iou = 0.3
            for obj in candidates:
                overlap = _iou(seed["box"], obj.box)
                if overlap > best_iou:
                    best, best_iou = obj, overlap
            masks = []
            if best is not None:
                for fi in frames:
                    if best.present_on(fi):
                        masks.append(
                            {
                                "frame_index": fi,
                                "counts": _rle_counts(_box_mask(scenario, best.box)),
                            }
                        )
            tracks.append({"size": [scenario.height_px, scenario.width_px], "masks": masks})
        return {"tracks": tracks}

    def refer(self, request: dict) -> dict:
        scenario = self._scenario(request["video_id"])
        targets = [
            o
            for o in scenario.objects
            if o.referring == request["referring"] and o.present_on(request["frame_index"])
        ]
        indexes = []
        for obj in targets:
            best, best_iou = None, 0.3
            for i, box in enumerate(request["boxes"]):
                overlap = _iou(box["box"], obj.box)
                if overlap > best_iou:
                    best, best_iou = i, overlap
            if best is not None and best not in indexes:
                indexes.append(best)
        return {"indexes": indexes}

    def embed(self, request: dict) -> dict:
        dim = self.config.embed_dim
        vectors = []
        for fi in request["frame_indexes"]:
            rng = np.random.default_rng(
                _seed_from(self.config.seed, request["video_id"], "embed", fi)
            )
            vec = rng.standard_normal(dim)
            vectors.append((vec / np.linalg.norm(vec)).tolist())
        return {"vectors": vectors}

    def scenes(self, request: dict) -> dict:
        scenario = self._scenario(request["video_id"])
        threshold = request["threshold"]
        return {"cuts_s": sorted(t for t, strength in scenario.cuts if strength >= threshold)}


class OpenCVSceneDetector:
    """HSV mean-frame-difference cuts over a real media file."""

    def __init__(self, config: ServiceConfig):
        self.config = config

    def scenes(self, request: dict) -> dict:
        import cv2

        path = _media_path(self.config.media_root, request["video_id"])
        capture = cv2.VideoCapture(str(path))
        fps = capture.get(cv2.CAP_PROP_FPS) or 30.0
        cuts = []
        prev = None
        index = 0
        while True:
            ok, frame = capture.read()
            if not ok:
                break
            hsv = cv2.cvtColor(frame, cv2.COLOR_BGR2HSV).astype(np.float32)
            if prev is not None:
                score = float(np.abs(hsv - prev).mean())
                if score >= request["threshold"]:
                    cuts.append(round(index / fps, 3))
            prev = hsv
            index += 1
        capture.release()
        return {"cuts_s": cuts}


class OpenCVEmbedder:
    """Downsampled grayscale frames as unit-norm embedding vectors."""

    def __init__(self, config: ServiceConfig):
        self.config = config

    def embed(self, request: dict) -> dict:
        import cv2

        path = _media_path(self.config.media_root, request["video_id"])
        capture = cv2.VideoCapture(str(path))
        side = int(np.sqrt(self.config.embed_dim))
        vectors = []
        for fi in request["frame_indexes"]:
            capture.set(cv2.CAP_PROP_POS_FRAMES, fi)
            ok, frame = capture.read()
            if not ok:
                raise RuntimeError(f"frame {fi} not decodable from {path}")
            gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
            small = cv2.resize(gray, (side, side)).astype(np.float64).ravel()
            padded = np.zeros(self.config.embed_dim)
            padded[: small.size] = small
            norm = np.linalg.norm(padded)
            vectors.append((padded / norm if norm else padded).tolist())
        capture.release()
        return {"vectors": vectors}


def _media_path(root: Path, video_id: str) -> Path:
    for ext in (".mp4", ".avi", ".mkv", ".webm"):
        candidate = Path(root) / f"{video_id}{ext}"
        if candidate.exists():
            return candidate
    raise RuntimeError(f"no media file for '{video_id}' under {root}")


def build_handlers(config: ServiceConfig) -> dict[str, Optional[callable]]:
    """Map op -> handler; roles whose backing fails to load come back None
    (the service answers 501 for them)."""
    canned = CannedBackend(config)
    handlers: dict[str, Optional[callable]] = {}
    for op, role in ROLE_FOR_OP.items():
        kind = config.role_kind(role)
        if kind == "disabled":
            handlers[op] = None
        elif kind == "canned":
            handlers[op] = getattr(canned, op)
        elif kind == "opencv" and op in ("scenes", "embed"):
            try:
                import cv2  # noqa: F401
            except ImportError:
                logger.warning("role %s: OpenCV unavailable; disabling", role)
                handlers[op] = None
                continue
            wrapper = OpenCVSceneDetector(config) if op == "scenes" else OpenCVEmbedder(config)
            handlers[op] = getattr(wrapper, op)
        else:
            logger.warning("role %s: unknown kind '%s'; disabling", role, kind)
            handlers[op] = None
    return handlers
