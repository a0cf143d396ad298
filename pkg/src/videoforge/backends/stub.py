"""Deterministic stub backends driven entirely by scripted worlds.

Every method is a pure function of (world, request, seed): identical calls
return identical results, which makes full pipeline runs reproducible and
lets tests treat the world script as ground truth.
"""

from __future__ import annotations

from typing import Mapping, Optional

import numpy as np

from .. import prompts
from ..errors import InvalidRequest
from ..metadata import FrameMask
from ..qa.timecode import format_timestamp
from ..util import derive_seed
from .base import (
    Backend,
    BackendConfig,
    check_describe_args,
    check_detect_args,
    check_embed_args,
    check_generate_args,
    check_refer_args,
    check_scenes_args,
    check_track_args,
    iou,
)
from .world import StubWorld, WorldObject

_ANIMAL_NOUNS = {"dog", "cat", "bird", "horse", "animal", "fish", "rabbit"}
_IOU_MATCH = 0.3


def pronoun_for(generalized_noun: str) -> str:
    if generalized_noun == "person":
        return "this person"
    if generalized_noun in _ANIMAL_NOUNS:
        return "this animal"
    return "it"


class StubBackend(Backend):
    """Serves all seven roles from a shared mapping of scripted worlds."""

    def __init__(self, worlds: Mapping[str, StubWorld], config: BackendConfig):
        self.worlds = dict(worlds)
        self.config = config

    def _world(self, video_id: str) -> StubWorld:
        if video_id not in self.worlds:
            raise InvalidRequest(f"unknown video '{video_id}' in stub world store")
        return self.worlds[video_id]

    # -- text roles ---------------------------------------------------------

    def describe_video(self, video_id, prompt, frame_indexes=None, clip=None):
        check_describe_args(video_id, prompt)
        world = self._world(video_id)

        canned = world.canned.get("describe:" + prompts.prompt_digest(prompt))
        if canned is not None:
            return canned
        if prompt == prompts.ENTITY_RECOGNIZER_PROMPT:
            return world.paragraph_text()

        window = self._window(world, frame_indexes, clip)
        referring = prompts.parse_presence_question(prompt)
        if referring is not None:
            obj = self._object_by_referring(world, referring)
            if obj is not None and world.present_in_window(obj, *window):
                return "Yes."
            return "No."
        referring = prompts.parse_behavior_question(prompt)
        if referring is not None:
            obj = self._object_by_referring(world, referring)
            if obj is None:
                return "Nothing clearly happens."
            return world.behavior_in_window(obj, *window)

        digest = prompts.prompt_digest(prompt)
        return f"Scripted description of {video_id} for request {digest} (seed {self.config.seed})."

    @staticmethod
    def _window(world: StubWorld, frame_indexes, clip) -> tuple[float, float]:
        if clip is not None:
            return float(clip[0]), float(clip[1])
        if frame_indexes:
            times = [world.record.frame_time(i) for i in frame_indexes]
            return min(times), max(times) + 1.0 / world.record.fps
        return 0.0, world.record.duration_s

    @staticmethod
    def _object_by_referring(world: StubWorld, referring: str) -> Optional[WorldObject]:
        for obj in world.objects:
            if obj.referring == referring:
                return obj
        return None

    def generate_text(self, prompt, schema_hint=None):
        check_generate_args(prompt)
        world = self._world_for_prompt(prompt)
        repair = prompts.REPAIR_MARKER in prompt
        if world is not None:
            key = (schema_hint or "generic") + (":repair" if repair else "")
            canned = world.canned.get("generate:" + key)
            if canned is not None:
                return canned

        if schema_hint == "three_lists" and world is not None:
            from ..util import canonical_json

            return canonical_json(world.parser_lists())
        if schema_hint == "qa_items":
            payload = prompts.extract_fenced_json(prompt)
            if payload is None:
                return "[]"
            from ..util import canonical_json

            return canonical_json(_generate_qa_items(payload))
        if schema_hint == "rewrite":
            payload = prompts.extract_fenced_json(prompt)
            if payload is None:
                return ""
            return _rewrite_question(payload)

        digest = prompts.prompt_digest(prompt)
        return f"Scripted reply for request {digest} (seed {self.config.seed})."

    def _world_for_prompt(self, prompt: str) -> Optional[StubWorld]:
        for world in self.worlds.values():
            if world.paragraph_text() in prompt:
                return world
            payload = prompts.extract_fenced_json(prompt)
            if payload and payload.get("video", {}).get("video_id") == world.record.video_id:
                return world
        if len(self.worlds) == 1:
            return next(iter(self.worlds.values()))
        return None

    # -- vision roles --------------------------------------------------------

    def detect(self, video_id, frame_index, labels):
        check_detect_args(labels)
        return self._world(video_id).detections_on(frame_index, labels)

    def track(self, video_id, frame_indexes, seed_boxes):
        check_track_args(frame_indexes, seed_boxes)
        world = self._world(video_id)
        seed_frame = frame_indexes[0]
        candidates = [o for o in world.objects if o.present_on(seed_frame)]
        tracks: list[list[FrameMask]] = []
        for box in seed_boxes:
            best, best_iou = None, _IOU_MATCH
            for obj in candidates:
                overlap = iou(box.box, obj.box)
                if overlap > best_iou:
                    best, best_iou = obj, overlap
            masks: list[FrameMask] = []
            if best is not None:
                for fi in frame_indexes:
                    mask = world.mask_for(best, fi)
                    if mask is not None:
                        masks.append(FrameMask(fi, mask))
            tracks.append(masks)
        return tracks

    def resolve_reference(self, video_id, frame_index, boxes, referring):
        check_refer_args(boxes)
        world = self._world(video_id)
        if referring in world.referrer_overrides:
            target_ids = list(world.referrer_overrides[referring])
        else:
            target_ids = [o.object_id for o in world.objects if o.referring == referring]
        indexes: list[int] = []
        for oid in target_ids:
            obj = world.objects[oid]
            if not obj.present_on(frame_index):
                continue
            best, best_iou = None, _IOU_MATCH
            for i, box in enumerate(boxes):
                overlap = iou(box.box, obj.box)
                if overlap > best_iou:
                    best, best_iou = i, overlap
            if best is not None and best not in indexes:
                indexes.append(best)
        return indexes

    def embed_frames(self, video_id, frame_indexes, rate_fps=3.0):
        check_embed_args(frame_indexes)
        world = self._world(video_id)
        dim = world.embed_dim
        vectors = np.zeros((len(frame_indexes), dim), dtype=np.float64)
        for row, fi in enumerate(frame_indexes):
            seg = world.segment_of(world.record.frame_time(fi))
            base = np.zeros(dim)
            base[seg % dim] = 1.0  # distinct constant direction per segment
            noise_rng = np.random.default_rng(
                derive_seed(self.config.seed, video_id, "embed-noise", fi)
            )
            vec = base + 0.005 * noise_rng.standard_normal(dim)
            vectors[row] = vec / np.linalg.norm(vec)
        return vectors

    def detect_scene_changes(self, video_id, threshold):
        check_scenes_args(threshold)
        world = self._world(video_id)
        return sorted(c.t for c in world.cuts if c.strength >= threshold)


# ---------------------------------------------------------------------------
# Rule-based LLM behaviors (what a cooperative text model would return)
# ---------------------------------------------------------------------------

def _phase_of(start_s: float, end_s: float, duration_s: float) -> str:
    mid = (start_s + end_s) / 2.0
    pos = mid / duration_s if duration_s > 0 else 0.0
    if pos < 1 / 3:
        return "beginning"
    if pos < 2 / 3:
        return "middle"
    return "end"


def _fragment(behavior: str, referring: str) -> str:
    prefix = f"The {referring} is "
    if behavior.startswith(prefix):
        return behavior[len(prefix):].rstrip(".")
    return "clearly visible"


def _mcq(choices: list[str], correct: int) -> dict:
    letter = chr(ord("A") + correct)
    return {"choices": choices, "correct_index": correct, "answer": f"({letter})"}


def _generate_qa_items(payload: dict) -> list[dict]:
    task_types = payload.get("task_types", [])
    duration = payload.get("video", {}).get("duration_s", 0.0)
    clips = {c["clip_id"]: c for c in payload.get("clips", [])}
    referring = {e["entity_id"]: e["referring"] for e in payload.get("entities", [])}
    transcript = payload.get("transcript", [])
    present = [t for t in transcript if t.get("present") and t.get("behavior")]

    items: list[dict] = []

    def add(task_type, question, answer, entity_ids, time_ref=None, mcq=None):
        item = {
            "task_type": task_type,
            "format": "multiple_choice" if mcq else "open_ended",
            "question": question,
            "answer": mcq["answer"] if mcq else answer,
            "choices": mcq["choices"] if mcq else None,
            "correct_index": mcq["correct_index"] if mcq else None,
            "entity_ids": entity_ids,
            "time_ref": time_ref,
        }
        items.append(item)

    clip_count = len(clips)
    present_clips: dict[int, list[int]] = {}
    for t in present:
        present_clips.setdefault(t["entity_id"], []).append(t["clip_id"])

    if 7 in task_types:
        for t in present:
            clip = clips[t["clip_id"]]
            ref = referring[t["entity_id"]]
            add(
                7,
                f"What did the {ref} do between {format_timestamp(clip['start_s'])} "
                f"and {format_timestamp(clip['end_s'])}?",
                t["behavior"],
                [t["entity_id"]],
                {"kind": "exact_range", "start_s": clip["start_s"], "end_s": clip["end_s"]},
            )

    if 8 in task_types:
        for eid, in_clips in sorted(present_clips.items()):
            ref = referring[eid]
            first = next(t for t in present if t["entity_id"] == eid)
            if len(in_clips) == clip_count and clip_count > 1:
                add(
                    8,
                    f"What did the {ref} do throughout the video?",
                    first["behavior"],
                    [eid],
                    {"kind": "coarse_phase", "phase": "throughout"},
                )
            else:
                clip = clips[first["clip_id"]]
                phase = _phase_of(clip["start_s"], clip["end_s"], duration)
                add(
                    8,
                    f"What did the {ref} do in the {phase} of the video?",
                    first["behavior"],
                    [eid],
                    {"kind": "coarse_phase", "phase": phase},
                )

    if 9 in task_types:
        phases = ["The beginning.", "The middle.", "The end.", "Throughout the video."]
        for eid, in_clips in sorted(present_clips.items()):
            ref = referring[eid]
            first = next(t for t in present if t["entity_id"] == eid)
            clip = clips[first["clip_id"]]
            if len(in_clips) == clip_count and clip_count > 1:
                phase, answer = "throughout", "Throughout the video."
            else:
                phase = _phase_of(clip["start_s"], clip["end_s"], duration)
                answer = f"The {phase}."
            frag = _fragment(first["behavior"], ref)
            question = f"During which part of the video was the {ref} {frag}?"
            add(9, question, answer, [eid], {"kind": "coarse_phase", "phase": phase})
            add(
                9,
                question,
                None,
                [eid],
                {"kind": "coarse_phase", "phase": phase},
                mcq=_mcq(phases, phases.index(answer)),
            )

    pair = None
    for t in present:
        for u in present:
            if t["clip_id"] == u["clip_id"] and t["entity_id"] < u["entity_id"]:
                pair = (t, u)
                break
        if pair:
            break

    if pair is not None:
        a, b = pair
        ref_a, ref_b = referring[a["entity_id"]], referring[b["entity_id"]]
        frag_a = _fragment(a["behavior"], ref_a)
        frag_b = _fragment(b["behavior"], ref_b)
        if 10 in task_types:
            add(
                10,
                f"What was the {ref_a} doing while the {ref_b} was {frag_b}?",
                a["behavior"],
                [a["entity_id"], b["entity_id"]],
            )
        if 11 in task_types:
            add(
                11,
                f"Who or what was {frag_a} while the {ref_b} was {frag_b}?",
                f"The {ref_a}.",
                [b["entity_id"], a["entity_id"]],
            )
            if len(referring) >= 2:
                choices = [f"The {r}." for r in referring.values()]
                correct = list(referring).index(a["entity_id"])
                add(
                    11,
                    f"Who or what was {frag_a} while the {ref_b} was {frag_b}?",
                    None,
                    [b["entity_id"], a["entity_id"]],
                    mcq=_mcq(choices, correct),
                )
    return items


def _rewrite_question(payload: dict) -> str:
    question = payload.get("question", "")
    referring = payload.get("referring", "")
    pronoun = pronoun_for(payload.get("generalized", ""))
    for pattern in (f"the {referring}", f"The {referring}", f"a {referring}", f"A {referring}", referring):
        if pattern in question:
            return question.replace(pattern, pronoun, 1)
    return question
