"""Validated domain types shared by every pipeline stage.

All types are immutable value objects; masks are numpy arrays that are
treated as frozen after construction. ``validate_metadata`` is total: it
reports violations as data instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .util import round_ms

MASK_GROUPS = ("G6", "G7", "G8")
GROUP_TASKS: dict[str, tuple[int, ...]] = {
    "G1": (1, 2, 3, 4),
    "G2": (5,),
    "G3": (7,),
    "G4": (8, 9, 10, 11),
    "G5": (6,),
    "G6": (7,),
    "G7": (8, 9, 10, 11),
    "G8": (6,),
}
COARSE_PHASES = ("beginning", "middle", "end", "throughout")
REGION_TOKEN = "<region>"


@dataclass(frozen=True)
class VideoRecord:
    """Static facts about one video; durations in seconds, sizes in pixels."""

    video_id: str
    duration_s: float
    fps: float
    frame_count: int
    width_px: int
    height_px: int

    def frame_time(self, frame_index: int) -> float:
        return frame_index / self.fps

    def frame_at(self, t: float) -> int:
        """Frame index containing time ``t`` (floor(t * fps), clamped)."""
        return min(max(int(t * self.fps + 1e-9), 0), self.frame_count - 1)


@dataclass(frozen=True)
class ClipSegment:
    clip_id: int
    start_s: float
    end_s: float

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def contains(self, t: float) -> bool:
        return self.start_s <= t < self.end_s


@dataclass(frozen=True)
class Entity:
    entity_id: int
    referring: str
    noun: str
    generalized_noun: str


@dataclass(frozen=True)
class FrameMask:
    """Binary mask for one frame; persisted run-length encoded."""

    frame_index: int
    mask: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=np.uint8))


@dataclass(frozen=True)
class Masklet:
    """Per-entity sequence of frame masks; gaps mean the entity is absent."""

    entity_id: int
    frames: tuple[FrameMask, ...]

    def frame_indices(self) -> tuple[int, ...]:
        return tuple(fm.frame_index for fm in self.frames)

    def mask_at(self, frame_index: int) -> Optional[np.ndarray]:
        for fm in self.frames:
            if fm.frame_index == frame_index:
                return fm.mask
        return None


@dataclass(frozen=True)
class TranscriptEntry:
    entity_id: int
    clip_id: int
    present: bool
    behavior: Optional[str] = None


@dataclass(frozen=True)
class TimeRef:
    """Either an exact [start, end) range or a coarse phase of the video."""

    kind: str  # "exact_range" | "coarse_phase"
    start_s: Optional[float] = None
    end_s: Optional[float] = None
    phase: Optional[str] = None

    @staticmethod
    def exact(start_s: float, end_s: float) -> "TimeRef":
        return TimeRef("exact_range", round_ms(start_s), round_ms(end_s))

    @staticmethod
    def coarse(phase: str) -> "TimeRef":
        return TimeRef("coarse_phase", phase=phase)


@dataclass(frozen=True)
class RegionRef:
    """Mask reference: entity's masklet restricted to one chosen frame."""

    entity_id: int
    frame_index: int


@dataclass(frozen=True)
class InstructionSample:
    sample_id: str
    video_id: str
    task_type: int
    group: str
    clip_id: Optional[int]  # None means the full video is the visual input
    format: str  # "open_ended" | "multiple_choice"
    question: str
    answer: str
    choices: tuple[str, ...] = ()
    correct_index: Optional[int] = None
    region_refs: tuple[RegionRef, ...] = ()
    time_refs: tuple[TimeRef, ...] = ()
    entity_ids: tuple[int, ...] = ()  # entities the question refers to, primary first
    seed: int = 0


@dataclass(frozen=True)
class VideoMetadata:
    """The engine's central per-video document."""

    record: VideoRecord
    clips: tuple[ClipSegment, ...]
    entities: tuple[Entity, ...]
    masklets: tuple[Masklet, ...]
    transcript: tuple[TranscriptEntry, ...]
    first_appearance: dict[int, int] = field(default_factory=dict)

    def entity_by_id(self, entity_id: int) -> Optional[Entity]:
        for e in self.entities:
            if e.entity_id == entity_id:
                return e
        return None

    def masklet_for(self, entity_id: int) -> Optional[Masklet]:
        for m in self.masklets:
            if m.entity_id == entity_id:
                return m
        return None

    def transcript_for(self, entity_id: int, clip_id: int) -> Optional[TranscriptEntry]:
        for t in self.transcript:
            if t.entity_id == entity_id and t.clip_id == clip_id:
                return t
        return None


def first_appearance_from_transcript(transcript) -> dict[int, int]:
    """Minimum clip_id with present=True per entity; absent entities omitted."""
    first: dict[int, int] = {}
    for entry in transcript:
        if entry.present and (entry.entity_id not in first or entry.clip_id < first[entry.entity_id]):
            first[entry.entity_id] = entry.clip_id
    return first


def _ms(x: float) -> int:
    return int(round(x * 1000))


def validate_metadata(meta: VideoMetadata) -> list[str]:
    """Check every invariant; returns one message per violation (empty = valid)."""
    v: list[str] = []
    rec = meta.record

    if not rec.video_id:
        v.append("record.video_id: empty")
    if rec.duration_s < 0:
        v.append("record.duration_s: negative")
    if rec.fps <= 0:
        v.append("record.fps: not positive")
    if rec.frame_count <= 0:
        v.append("record.frame_count: not positive")
    if rec.width_px <= 0 or rec.height_px <= 0:
        v.append("record.width_px/height_px: not positive")
    if rec.fps > 0 and abs(rec.frame_count - rec.duration_s * rec.fps) > 1 + 1e-6:
        v.append("record.frame_count: differs from duration_s*fps by more than one frame")

    prev_end = 0.0
    for i, clip in enumerate(meta.clips):
        if clip.clip_id != i:
            v.append(f"clips[{i}].clip_id: expected {i}, got {clip.clip_id}")
        if not (0 <= clip.start_s < clip.end_s <= rec.duration_s + 1e-9):
            v.append(f"clips[{i}]: bounds [{clip.start_s}, {clip.end_s}) outside [0, {rec.duration_s}]")
        if _ms(clip.start_s) != _ms(prev_end):
            v.append(f"clips[{i}]: clips not contiguous (start {clip.start_s} != previous end {prev_end})")
        prev_end = clip.end_s
    if meta.clips and _ms(prev_end) != _ms(rec.duration_s):
        v.append(f"clips: do not cover video (last end {prev_end} != duration {rec.duration_s})")

    seen_ids = set()
    for i, ent in enumerate(meta.entities):
        if ent.entity_id in seen_ids:
            v.append(f"entities[{i}].entity_id: duplicate id {ent.entity_id}")
        seen_ids.add(ent.entity_id)
        if not ent.referring.strip():
            v.append(f"entities[{i}].referring: empty")
        if ent.noun not in ent.referring and ent.noun != ent.referring:
            v.append(f"entities[{i}].noun: '{ent.noun}' is not contained in referring '{ent.referring}'")
        if not ent.generalized_noun.strip():
            v.append(f"entities[{i}].generalized_noun: empty")

    for i, m in enumerate(meta.masklets):
        if m.entity_id not in seen_ids:
            v.append(f"masklets[{i}].entity_id: unknown entity {m.entity_id}")
        if not m.frames:
            v.append(f"masklets[{i}]: zero frames")
        prev = -1
        for fm in m.frames:
            if fm.frame_index <= prev:
                v.append(f"masklets[{i}]: frame indices not strictly increasing at {fm.frame_index}")
            prev = fm.frame_index
            if fm.frame_index >= rec.frame_count:
                v.append(f"masklets[{i}]: frame index {fm.frame_index} >= frame_count {rec.frame_count}")
            if fm.mask.shape != (rec.height_px, rec.width_px):
                v.append(f"masklets[{i}]: mask shape {fm.mask.shape} != video ({rec.height_px}, {rec.width_px})")
            elif not fm.mask.any():
                v.append(f"masklets[{i}]: empty mask on frame {fm.frame_index}")

    if meta.transcript or (meta.entities and meta.clips):
        pairs = [(t.entity_id, t.clip_id) for t in meta.transcript]
        expected = {(e.entity_id, c.clip_id) for e in meta.entities for c in meta.clips}
        if len(pairs) != len(set(pairs)):
            v.append("transcript: duplicate (entity, clip) pairs")
        missing = expected - set(pairs)
        extra = set(pairs) - expected
        if missing:
            v.append(f"transcript: missing pairs {sorted(missing)}")
        if extra:
            v.append(f"transcript: unknown pairs {sorted(extra)}")
        for t in meta.transcript:
            has_behavior = bool(t.behavior and t.behavior.strip())
            if t.present and not has_behavior:
                v.append(f"transcript({t.entity_id},{t.clip_id}).behavior: empty while present")
            if not t.present and has_behavior:
                v.append(f"transcript({t.entity_id},{t.clip_id}).behavior: set while absent")

        recomputed = first_appearance_from_transcript(meta.transcript)
        if recomputed != dict(meta.first_appearance):
            v.append("first_appearance: does not match transcript recomputation")

    return v


def check_sample(sample: InstructionSample, duration_s: float | None = None) -> list[str]:
    """Validate one instruction sample against the group/task rules."""
    v: list[str] = []
    if sample.group not in GROUP_TASKS:
        v.append(f"group: unknown '{sample.group}'")
    elif sample.task_type not in GROUP_TASKS[sample.group]:
        v.append(f"task_type: {sample.task_type} not allowed for group {sample.group}")
    if not (1 <= sample.task_type <= 11):
        v.append(f"task_type: {sample.task_type} outside 1..11")
    if sample.format not in ("open_ended", "multiple_choice"):
        v.append(f"format: unknown '{sample.format}'")
    if not sample.question.strip():
        v.append("question: empty")
    if not sample.answer.strip():
        v.append("answer: empty")

    if sample.group in MASK_GROUPS:
        if not sample.region_refs:
            v.append("region_refs: mask-referring group without a region reference")
        if REGION_TOKEN not in sample.question:
            v.append(f"question: mask-referring group without literal '{REGION_TOKEN}'")
    elif sample.region_refs:
        v.append("region_refs: set on a non mask-referring group")

    if sample.format == "multiple_choice":
        if len(sample.choices) < 2 or len(set(sample.choices)) != len(sample.choices):
            v.append("choices: need >= 2 distinct options")
        if sample.correct_index is None or not (0 <= sample.correct_index < len(sample.choices)):
            v.append("correct_index: missing or out of range")
    elif sample.choices:
        v.append("choices: set on an open-ended sample")

    for tr in sample.time_refs:
        if tr.kind == "exact_range":
            if tr.start_s is None or tr.end_s is None or not (tr.start_s < tr.end_s):
                v.append(f"time_refs: bad exact range ({tr.start_s}, {tr.end_s})")
            elif duration_s is not None and tr.end_s > duration_s + 1e-9:
                v.append(f"time_refs: range ends after video duration ({tr.end_s} > {duration_s})")
        elif tr.kind == "coarse_phase":
            if tr.phase not in COARSE_PHASES:
                v.append(f"time_refs: unknown phase '{tr.phase}'")
        else:
            v.append(f"time_refs: unknown kind '{tr.kind}'")
    return v
