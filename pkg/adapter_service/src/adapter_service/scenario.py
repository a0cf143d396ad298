"""Scenario data the canned wrappers serve: per-video objects, cuts, dims."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class ScenarioObject:
    label: str
    box: tuple[float, float, float, float]
    frames: tuple[int, int]  # inclusive presence range
    score: float = 0.9
    referring: Optional[str] = None

    def present_on(self, frame_index: int) -> bool:
        return self.frames[0] <= frame_index <= self.frames[1]


@dataclass(frozen=True)
class VideoScenario:
    video_id: str
    width_px: int = 128
    height_px: int = 96
    fps: float = 3.0
    duration_s: float = 10.0
    objects: tuple[ScenarioObject, ...] = ()
    cuts: tuple[tuple[float, float], ...] = ()  # (timestamp, strength)
    replies: dict[str, str] = field(default_factory=dict)  # prompt sha12 -> text


@dataclass(frozen=True)
class ServiceConfig:
    media_root: Path = Path(".")
    seed: int = 0
    embed_dim: int = 16
    roles: dict[str, dict] = field(default_factory=dict)
    videos: dict[str, VideoScenario] = field(default_factory=dict)

    def role_kind(self, role: str) -> str:
        return self.roles.get(role, {}).get("kind", "canned")

    def role_options(self, role: str) -> dict:
        return self.roles.get(role, {})


def _scenario_from_obj(video_id: str, obj: dict) -> VideoScenario:
    return VideoScenario(
        video_id=video_id,
        width_px=obj.get("width_px", 128),
        height_px=obj.get("height_px", 96),
        fps=obj.get("fps", 3.0),
        duration_s=obj.get("duration_s", 10.0),
        objects=tuple(
            ScenarioObject(
                label=o["label"],
                box=tuple(o["box"]),
                frames=tuple(o.get("frames", (0, 10 ** 9))),
                score=o.get("score", 0.9),
                referring=o.get("referring"),
            )
            for o in obj.get("objects", [])
        ),
        cuts=tuple((c["t"], c.get("strength", 27.0)) for c in obj.get("cuts", [])),
        replies=dict(obj.get("replies", {})),
    )


def config_from_obj(obj: dict) -> ServiceConfig:
    return ServiceConfig(
        media_root=Path(obj.get("media_root", ".")),
        seed=obj.get("seed", 0),
        embed_dim=obj.get("embed_dim", 16),
        roles=dict(obj.get("roles", {})),
        videos={
            vid: _scenario_from_obj(vid, v) for vid, v in obj.get("videos", {}).items()
        },
    )


def load_config(path: Path) -> ServiceConfig:
    return config_from_obj(json.loads(Path(path).read_text("utf-8")))
