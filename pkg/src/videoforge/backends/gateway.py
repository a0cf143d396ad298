"""Gateway: one place binding the six model roles to configured backends."""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Mapping, Optional

from .base import ROLES, Backend, BackendConfig
from .remote import RemoteBackend
from .replay import ReplayBackend
from .stub import StubBackend
from .world import StubWorld

DEFAULT_IN_FLIGHT_CAP = 4


class Gateway:
    """Routes operations to per-role backends under an in-flight cap.

    Backends are safe for concurrent use; the semaphore simply bounds how
    many calls per role run at once when videos are processed in parallel.
    """

    def __init__(self, backends: Mapping[str, Backend], in_flight_cap: int = DEFAULT_IN_FLIGHT_CAP):
        missing = set(ROLES) - set(backends)
        if missing:
            raise ValueError(f"gateway missing backends for roles: {sorted(missing)}")
        self._backends = dict(backends)
        self._sems = {role: threading.BoundedSemaphore(in_flight_cap) for role in ROLES}

    # -- construction --------------------------------------------------------

    @classmethod
    def stub(
        cls,
        worlds: Mapping[str, StubWorld],
        seed: int = 0,
        in_flight_cap: int = DEFAULT_IN_FLIGHT_CAP,
    ) -> "Gateway":
        backends = {
            role: StubBackend(worlds, BackendConfig(role=role, mode="stub", seed=seed))
            for role in ROLES
        }
        return cls(backends, in_flight_cap)

    @classmethod
    def replay(
        cls,
        fixture_dir: Path,
        seed: int = 0,
        in_flight_cap: int = DEFAULT_IN_FLIGHT_CAP,
    ) -> "Gateway":
        backends = {
            role: ReplayBackend(
                BackendConfig(role=role, mode="replay", seed=seed, fixture_dir=str(fixture_dir))
            )
            for role in ROLES
        }
        return cls(backends, in_flight_cap)

    @classmethod
    def remote(
        cls,
        endpoint: str | Mapping[str, str],
        seed: int = 0,
        timeout_s: float = 30.0,
        max_retries: int = 3,
        backoff_s: float = 0.5,
        record_dir: Optional[Path] = None,
        in_flight_cap: int = DEFAULT_IN_FLIGHT_CAP,
    ) -> "Gateway":
        backends = {}
        for role in ROLES:
            url = endpoint if isinstance(endpoint, str) else endpoint[role]
            config = BackendConfig(
                role=role,
                mode="remote",
                endpoint=url,
                seed=seed,
                timeout_s=timeout_s,
                max_retries=max_retries,
                backoff_s=backoff_s,
            )
            backends[role] = RemoteBackend(config, record_dir=record_dir)
        return cls(backends, in_flight_cap)

    def backend(self, role: str) -> Backend:
        return self._backends[role]

    # -- operations ----------------------------------------------------------

    def describe_video(self, video_id, prompt, frame_indexes=None, clip=None):
        with self._sems["describer"]:
            return self._backends["describer"].describe_video(
                video_id, prompt, frame_indexes=frame_indexes, clip=clip
            )

    def generate_text(self, prompt, schema_hint=None):
        with self._sems["text_llm"]:
            return self._backends["text_llm"].generate_text(prompt, schema_hint=schema_hint)

    def detect(self, video_id, frame_index, labels):
        with self._sems["detector"]:
            return self._backends["detector"].detect(video_id, frame_index, labels)

    def track(self, video_id, frame_indexes, seed_boxes):
        with self._sems["tracker"]:
            return self._backends["tracker"].track(video_id, frame_indexes, seed_boxes)

    def resolve_reference(self, video_id, frame_index, boxes, referring):
        with self._sems["referrer"]:
            return self._backends["referrer"].resolve_reference(
                video_id, frame_index, boxes, referring
            )

    def embed_frames(self, video_id, frame_indexes, rate_fps=3.0):
        with self._sems["embedder"]:
            return self._backends["embedder"].embed_frames(video_id, frame_indexes, rate_fps)

    def detect_scene_changes(self, video_id, threshold):
        with self._sems["scene_detector"]:
            return self._backends["scene_detector"].detect_scene_changes(video_id, threshold)
