"""Per-video pseudo-annotation: recognize entities, parse referrings, clip,
generate masklets, transcribe, and assemble validated metadata."""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import prompts
from .clipper import (
    DEFAULT_CLUSTER_FACTOR,
    DEFAULT_EMBED_RATE,
    DEFAULT_SCENE_THRESHOLD,
    clip_video,
)
from .errors import InvalidInput, NoDetections, ParserOutputError, PipelineError
from .masklets import MaskletConfig, generate_referring_masklets
from .metadata import (
    ClipSegment,
    Entity,
    TranscriptEntry,
    VideoMetadata,
    VideoRecord,
    first_appearance_from_transcript,
    validate_metadata,
)

logger = logging.getLogger(__name__)

_YES_RE = re.compile(r"^\s*yes\b", re.IGNORECASE)
_NO_RE = re.compile(r"^\s*no\b", re.IGNORECASE)


@dataclass(frozen=True)
class AnnotatorConfig:
    scene_threshold: float = DEFAULT_SCENE_THRESHOLD
    cluster_factor: float = DEFAULT_CLUSTER_FACTOR
    embed_rate: float = DEFAULT_EMBED_RATE
    transcribe_fps: float = 1.0
    min_clip_frames: int = 4
    max_clip_frames: int = 32
    masklet: MaskletConfig = field(default_factory=MaskletConfig)


class ProvenanceRecorder:
    """Collects {stage, prompt, response, wall_time_ms} rows for the sidecar."""

    def __init__(self):
        self.entries: list[dict] = []

    def record(self, stage: str, prompt: str, response: str, wall_time_ms: int) -> None:
        self.entries.append(
            {
                "stage": stage,
                "prompt": prompt,
                "response": response,
                "wall_time_ms": int(wall_time_ms),
            }
        )


@dataclass(frozen=True)
class AnnotationResult:
    metadata: VideoMetadata
    unassigned: tuple[int, ...]
    warnings: tuple[str, ...]
    provenance: tuple[dict, ...]


def _timed(prov: Optional[ProvenanceRecorder], stage: str, prompt: str, call):
    start = time.monotonic()
    response = call()
    elapsed_ms = int((time.monotonic() - start) * 1000)
    if prov is not None:
        prov.record(stage, prompt, response, elapsed_ms)
    return response


def recognize_entities(
    record: VideoRecord, gateway, prov: Optional[ProvenanceRecorder] = None
) -> str:
    """Ask the video describer for the active-entity paragraph."""
    if not record.video_id:
        raise InvalidInput("recognize_entities: empty video reference")
    prompt = prompts.ENTITY_RECOGNIZER_PROMPT
    return _timed(
        prov,
        "recognize_entities",
        prompt,
        lambda: gateway.describe_video(record.video_id, prompt),
    )


def parse_referrings(
    paragraph: str, gateway, prov: Optional[ProvenanceRecorder] = None
) -> list[Entity]:
    """Extract the three equal-length lists and build entities in array order.

    A malformed reply gets exactly one repair re-prompt before failing.
    """
    if not paragraph.strip():
        raise InvalidInput("parse_referrings: empty paragraph")
    last_error = ""
    for repair in (False, True):
        prompt = prompts.parser_prompt(paragraph, repair=repair)
        reply = _timed(
            prov,
            "parse_referrings",
            prompt,
            lambda p=prompt: gateway.generate_text(p, schema_hint="three_lists"),
        )
        try:
            return _entities_from_reply(reply)
        except ValueError as exc:
            last_error = str(exc)
            logger.warning("parser reply invalid (%s); repair=%s", exc, not repair)
    raise ParserOutputError(f"parser output invalid after repair: {last_error}")


def _entities_from_reply(reply: str) -> list[Entity]:
    try:
        obj = json.loads(reply)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValueError("reply is not a JSON object")
    try:
        referrings, nouns, generalized = obj["referrings"], obj["nouns"], obj["generalized"]
    except KeyError as exc:
        raise ValueError(f"missing array {exc}") from exc
    if not (len(referrings) == len(nouns) == len(generalized)):
        raise ValueError(
            f"array lengths differ: {len(referrings)}/{len(nouns)}/{len(generalized)}"
        )
    entities = []
    for i, (ref, noun, gen) in enumerate(zip(referrings, nouns, generalized)):
        if not (isinstance(ref, str) and ref.strip()):
            raise ValueError(f"referrings[{i}] empty")
        if not (isinstance(noun, str) and noun.strip()):
            raise ValueError(f"nouns[{i}] empty")
        if not (isinstance(gen, str) and gen.strip()):
            raise ValueError(f"generalized[{i}] empty")
        entities.append(Entity(i, ref.strip(), noun.strip(), gen.strip()))
    return entities


def _clip_frame_indexes(record: VideoRecord, clip: ClipSegment, config: AnnotatorConfig) -> list[int]:
    times = []
    t = clip.start_s
    while t < clip.end_s - 1e-9:
        times.append(t)
        t += 1.0 / config.transcribe_fps
    if len(times) < config.min_clip_frames:
        times = list(
            np.linspace(clip.start_s, clip.end_s, config.min_clip_frames, endpoint=False)
        )
    if len(times) > config.max_clip_frames:
        picks = np.linspace(0, len(times) - 1, config.max_clip_frames).round().astype(int)
        times = [times[i] for i in picks]
    indexes = []
    for t in times:
        idx = record.frame_at(t)
        if not indexes or idx != indexes[-1]:
            indexes.append(idx)
    return indexes


def transcribe(
    record: VideoRecord,
    clips: Sequence[ClipSegment],
    entities: Sequence[Entity],
    gateway,
    config: AnnotatorConfig = AnnotatorConfig(),
    prov: Optional[ProvenanceRecorder] = None,
) -> tuple[list[TranscriptEntry], list[str]]:
    """Two-step presence/behavior questioning for every (entity, clip) pair."""
    if not clips or not entities:
        raise InvalidInput("transcribe: needs at least one clip and one entity")
    entries: list[TranscriptEntry] = []
    warnings: list[str] = []
    for entity in entities:
        for clip in clips:
            frames = _clip_frame_indexes(record, clip, config)
            window = (clip.start_s, clip.end_s)
            presence_q = prompts.PRESENCE_QUESTION.format(referring=entity.referring)
            reply = _timed(
                prov,
                "transcribe_presence",
                presence_q,
                lambda q=presence_q: gateway.describe_video(
                    record.video_id, q, frame_indexes=frames, clip=window
                ),
            )
            if _YES_RE.match(reply):
                present = True
            elif _NO_RE.match(reply):
                present = False
            else:
                present = False
                warnings.append(
                    f"entity {entity.entity_id} clip {clip.clip_id}: "
                    f"presence reply neither yes nor no: {reply!r}"
                )
            behavior = None
            if present:
                behavior_q = prompts.BEHAVIOR_QUESTION.format(referring=entity.referring)
                behavior = _timed(
                    prov,
                    "transcribe_behavior",
                    behavior_q,
                    lambda q=behavior_q: gateway.describe_video(
                        record.video_id, q, frame_indexes=frames, clip=window
                    ),
                )
                if not behavior.strip():
                    present, behavior = False, None
                    warnings.append(
                        f"entity {entity.entity_id} clip {clip.clip_id}: empty behavior reply"
                    )
            entries.append(TranscriptEntry(entity.entity_id, clip.clip_id, present, behavior))
    for w in warnings:
        logger.warning("%s: %s", record.video_id, w)
    return entries, warnings


def annotate_video(
    record: VideoRecord,
    gateway,
    config: AnnotatorConfig = AnnotatorConfig(),
) -> AnnotationResult:
    """Full per-video pipeline; the result metadata always validates clean."""
    prov = ProvenanceRecorder()

    def stage(name: str, call):
        try:
            return call()
        except PipelineError as exc:
            raise exc.__class__(f"[{name}] {exc}") from exc

    paragraph = stage("recognize", lambda: recognize_entities(record, gateway, prov))
    entities = stage("parse", lambda: parse_referrings(paragraph, gateway, prov))
    clips = stage(
        "clip",
        lambda: clip_video(
            record,
            gateway,
            scene_threshold=config.scene_threshold,
            cluster_factor=config.cluster_factor,
            embed_rate=config.embed_rate,
        ),
    )

    try:
        result = stage(
            "masklets",
            lambda: generate_referring_masklets(record, entities, gateway, config.masklet),
        )
        masklets, unassigned = result.masklets, result.unassigned
    except NoDetections:
        logger.warning("%s: no detections on any frame; all entities unassigned", record.video_id)
        masklets, unassigned = (), tuple(e.entity_id for e in entities)

    if entities:
        transcript, warnings = stage(
            "transcribe", lambda: transcribe(record, clips, entities, gateway, config, prov)
        )
    else:
        transcript, warnings = [], []

    meta = VideoMetadata(
        record=record,
        clips=tuple(clips),
        entities=tuple(entities),
        masklets=tuple(masklets),
        transcript=tuple(transcript),
        first_appearance=first_appearance_from_transcript(transcript),
    )
    violations = validate_metadata(meta)
    if violations:
        raise InvalidInput(f"[validate] metadata invalid: {violations}")
    return AnnotationResult(
        metadata=meta,
        unassigned=tuple(unassigned),
        warnings=tuple(warnings),
        provenance=tuple(prov.entries),
    )
