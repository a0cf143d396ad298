"""LLM-driven QA generation and the mask-referring derivation."""

from __future__ import annotations

import json
import logging
import random
from typing import Sequence

from .. import prompts
from ..errors import InvalidInput
from ..metadata import (
    COARSE_PHASES,
    InstructionSample,
    Masklet,
    RegionRef,
    TimeRef,
    VideoMetadata,
)
from ..util import derive_seed

logger = logging.getLogger(__name__)

LLM_TASK_TYPES = (7, 8, 9, 10, 11)
GROUP_DERIVATION = {"G3": "G6", "G4": "G7", "G5": "G8"}

_IN_CONTEXT_EXAMPLES = [
    {
        "task_type": 7,
        "format": "open_ended",
        "question": "What did the man in a red jacket do between 00:00:02.000 and 00:00:06.500?",
        "answer": "The man in a red jacket jogged along the path toward the gate.",
        "choices": None,
        "correct_index": None,
        "entity_ids": [0],
        "time_ref": {"kind": "exact_range", "start_s": 2.0, "end_s": 6.5},
    },
    {
        "task_type": 9,
        "format": "multiple_choice",
        "question": "During which part of the video was the dog with a blue collar digging?",
        "answer": "(C)",
        "choices": ["The beginning.", "The middle.", "The end.", "Throughout the video."],
        "correct_index": 2,
        "entity_ids": [1],
        "time_ref": {"kind": "coarse_phase", "phase": "end"},
    },
    {
        "task_type": 10,
        "format": "open_ended",
        "question": "What was the man in a red jacket doing while the dog was digging?",
        "answer": "The man in a red jacket was watching from the bench.",
        "choices": None,
        "correct_index": None,
        "entity_ids": [0, 1],
        "time_ref": None,
    },
]


def transcript_payload(meta: VideoMetadata, task_types: Sequence[int]) -> dict:
    """Machine-readable transcript block embedded in the generation prompt."""
    return {
        "task_types": sorted(task_types),
        "video": {
            "video_id": meta.record.video_id,
            "duration_s": float(meta.record.duration_s),
        },
        "clips": [
            {"clip_id": c.clip_id, "start_s": float(c.start_s), "end_s": float(c.end_s)}
            for c in meta.clips
        ],
        "entities": [
            {"entity_id": e.entity_id, "referring": e.referring} for e in meta.entities
        ],
        "transcript": [
            {
                "entity_id": t.entity_id,
                "clip_id": t.clip_id,
                "present": t.present,
                "behavior": t.behavior,
            }
            for t in meta.transcript
        ],
        "first_appearance": {str(k): v for k, v in sorted(meta.first_appearance.items())},
    }


def gen_llm_qa(
    meta: VideoMetadata,
    gateway,
    task_types: Sequence[int],
    seed: int,
) -> list[InstructionSample]:
    """Request QA items for the given task types; invalid items are dropped.

    An unparseable reply earns one repair re-prompt; if that also fails the
    video contributes zero LLM samples.
    """
    requested = sorted(set(task_types))
    if not requested:
        return []
    if any(t not in LLM_TASK_TYPES for t in requested):
        raise InvalidInput(f"LLM task types must be within {LLM_TASK_TYPES}")

    payload = transcript_payload(meta, requested)
    items = None
    for repair in (False, True):
        prompt = prompts.qa_generation_prompt(payload, _IN_CONTEXT_EXAMPLES, repair=repair)
        reply = gateway.generate_text(prompt, schema_hint="qa_items")
        try:
            parsed = json.loads(reply)
            if not isinstance(parsed, list):
                raise ValueError("reply is not a JSON array")
            items = parsed
            break
        except (json.JSONDecodeError, ValueError) as exc:
            logger.warning("%s: QA reply unparseable (%s); repair=%s", meta.record.video_id, exc, not repair)
    if items is None:
        logger.warning("%s: no LLM samples after repair", meta.record.video_id)
        return []

    samples: list[InstructionSample] = []
    for i, item in enumerate(items):
        sample = _validate_item(meta, item, requested, seed)
        if sample is None:
            logger.warning("%s: dropped invalid LLM item %d", meta.record.video_id, i)
        else:
            samples.append(sample)
    return samples


def _validate_item(
    meta: VideoMetadata, item, requested: Sequence[int], seed: int
) -> InstructionSample | None:
    if not isinstance(item, dict):
        return None
    task_type = item.get("task_type")
    if task_type not in requested:
        return None
    fmt = item.get("format")
    if fmt not in ("open_ended", "multiple_choice"):
        return None
    question = item.get("question")
    answer = item.get("answer")
    if not (isinstance(question, str) and question.strip()):
        return None
    if not (isinstance(answer, str) and answer.strip()):
        return None

    entity_ids = item.get("entity_ids") or []
    known = {e.entity_id for e in meta.entities}
    if not all(isinstance(e, int) and e in known for e in entity_ids):
        return None

    choices: tuple[str, ...] = ()
    correct_index = None
    if fmt == "multiple_choice":
        raw_choices = item.get("choices")
        correct_index = item.get("correct_index")
        if not isinstance(raw_choices, list) or len(raw_choices) < 2:
            return None
        if len(set(raw_choices)) != len(raw_choices):
            return None
        if not isinstance(correct_index, int) or not (0 <= correct_index < len(raw_choices)):
            return None
        if answer != f"({chr(ord('A') + correct_index)})":
            return None
        choices = tuple(raw_choices)

    time_refs: tuple[TimeRef, ...] = ()
    raw_ref = item.get("time_ref")
    if raw_ref is not None:
        if not isinstance(raw_ref, dict):
            return None
        kind = raw_ref.get("kind")
        if kind == "exact_range":
            start, end = raw_ref.get("start_s"), raw_ref.get("end_s")
            if not (
                isinstance(start, (int, float))
                and isinstance(end, (int, float))
                and 0 <= start < end <= meta.record.duration_s + 1e-9
            ):
                return None
            time_refs = (TimeRef.exact(float(start), float(end)),)
        elif kind == "coarse_phase":
            if raw_ref.get("phase") not in COARSE_PHASES:
                return None
            time_refs = (TimeRef.coarse(raw_ref["phase"]),)
        else:
            return None
    if task_type == 7 and (not time_refs or time_refs[0].kind != "exact_range"):
        return None
    if task_type in (8, 9) and (not time_refs or time_refs[0].kind != "coarse_phase"):
        return None

    return InstructionSample(
        sample_id="",
        video_id=meta.record.video_id,
        task_type=task_type,
        group="G3" if task_type == 7 else "G4",
        clip_id=None,
        format=fmt,
        question=question.strip(),
        answer=answer.strip(),
        choices=choices,
        correct_index=correct_index,
        time_refs=time_refs,
        entity_ids=tuple(entity_ids),
        seed=seed,
    )


def sample_region_frame(masklet: Masklet, seed: int) -> int:
    """Seeded uniform choice among the masklet's covered frames."""
    frames = masklet.frame_indices()
    if not frames:
        raise InvalidInput("empty masklet has no frames to sample")
    return random.Random(seed).choice(list(frames))


def derive_mask_referring(
    samples: Sequence[InstructionSample],
    meta: VideoMetadata,
    gateway,
    seed: int,
) -> list[InstructionSample]:
    """Rewrite language-referenced questions into <region>-referenced ones.

    The target entity's referring expression is replaced by a pronoun or
    generic term, the region prefix is prepended, and a region reference is
    attached on a seeded random frame of the entity's masklet. Samples whose
    rewrite still contains the expression after one repair are skipped.
    """
    derived: list[InstructionSample] = []
    for sample in samples:
        target_group = GROUP_DERIVATION.get(sample.group)
        if target_group is None:
            raise InvalidInput(f"group {sample.group} has no mask-referring derivation")
        entity = None
        masklet = None
        for eid in sample.entity_ids:
            candidate = meta.masklet_for(eid)
            if candidate is not None and candidate.frames:
                entity = meta.entity_by_id(eid)
                masklet = candidate
                break
        if entity is None:
            continue

        rewritten = None
        for repair in (False, True):
            prompt = prompts.rewrite_prompt(
                sample.question, entity.referring, entity.generalized_noun, repair=repair
            )
            reply = gateway.generate_text(prompt, schema_hint="rewrite").strip()
            if reply and entity.referring not in reply:
                rewritten = reply
                break
            logger.warning(
                "%s: rewrite keeps referring expression; repair=%s", sample.video_id, not repair
            )
        if rewritten is None:
            continue

        frame = sample_region_frame(
            masklet, derive_seed(seed, sample.video_id, target_group, sample.question)
        )
        derived.append(
            InstructionSample(
                sample_id="",
                video_id=sample.video_id,
                task_type=sample.task_type,
                group=target_group,
                clip_id=sample.clip_id,
                format=sample.format,
                question=prompts.REGION_PREFIX + rewritten,
                answer=sample.answer,
                choices=sample.choices,
                correct_index=sample.correct_index,
                region_refs=(RegionRef(entity.entity_id, frame),),
                time_refs=sample.time_refs,
                entity_ids=sample.entity_ids,
                seed=sample.seed,
            )
        )
    return derived
