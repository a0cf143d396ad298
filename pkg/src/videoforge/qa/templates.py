"""Template-driven QA generation: behavior, presence, ordering, time ranges.

Question surface forms are drawn seeded from a fixed pool of four paraphrases
per task type; answers are fully determined by the transcript.
"""

from __future__ import annotations

import itertools
import random
from typing import Sequence

from ..metadata import ClipSegment, InstructionSample, TimeRef, VideoMetadata
from ..util import derive_seed
from .timecode import format_timestamp

UNCERTAIN_ANSWER = "The {referring} seems to be not clearly visible."

BEHAVIOR_QUESTIONS = (
    "What is happening to the {referring}?",
    "What is the {referring} doing?",
    "What is currently happening to the {referring}?",
    "Describe what is happening to the {referring}.",
)

PRESENCE_DESCRIBE_QUESTIONS = (
    "Were you able to see a {referring}?",
    "Did you see a {referring}?",
    "Could you spot a {referring}?",
    "Was a {referring} visible?",
)

PRESENCE_STRICT_QUESTIONS = (
    'Is there a {referring}? Answer only "Yes" or "No".',
    'Can you see a {referring}? Answer only "Yes" or "No".',
    'Does a {referring} appear here? Answer only "Yes" or "No".',
    'Is a {referring} visible? Answer only "Yes" or "No".',
)

ORDER_QUESTIONS = (
    "Which order shows their first appearance in the video?",
    "In which order do these entities first appear in the video?",
    "Which option lists the entities by first appearance?",
    "What is the correct order of first appearance in the video?",
)

RANGE_QUESTIONS = (
    "Could you explain what the {referring} is doing between {start} and {end}?",
    "What is the {referring} doing between {start} and {end}?",
    "Please describe what the {referring} is doing between {start} and {end}.",
    "Between {start} and {end}, what is the {referring} doing?",
)


def _pick(pool: Sequence[str], *seed_parts) -> str:
    rng = random.Random(derive_seed(*seed_parts))
    return rng.choice(list(pool))


def _sample(meta: VideoMetadata, **kwargs) -> InstructionSample:
    return InstructionSample(sample_id="", video_id=meta.record.video_id, **kwargs)


def gen_template_clip_qa(
    meta: VideoMetadata, clip: ClipSegment, seed: int
) -> list[InstructionSample]:
    """Task types 1-4 over one clip (group G1)."""
    samples: list[InstructionSample] = []
    vid = meta.record.video_id
    for entity in meta.entities:
        entry = meta.transcript_for(entity.entity_id, clip.clip_id)
        if entry is None:
            continue
        ref = entity.referring
        present_elsewhere = any(
            t.present and t.entity_id == entity.entity_id and t.clip_id != clip.clip_id
            for t in meta.transcript
        )
        if entry.present:
            samples.append(
                _sample(
                    meta,
                    task_type=1,
                    group="G1",
                    clip_id=clip.clip_id,
                    format="open_ended",
                    question=_pick(BEHAVIOR_QUESTIONS, seed, vid, 1, entity.entity_id, clip.clip_id).format(referring=ref),
                    answer=entry.behavior,
                    entity_ids=(entity.entity_id,),
                    seed=seed,
                )
            )
            samples.append(
                _sample(
                    meta,
                    task_type=3,
                    group="G1",
                    clip_id=clip.clip_id,
                    format="open_ended",
                    question=_pick(PRESENCE_DESCRIBE_QUESTIONS, seed, vid, 3, entity.entity_id, clip.clip_id).format(referring=ref),
                    answer=f"Yes. {entry.behavior}",
                    entity_ids=(entity.entity_id,),
                    seed=seed,
                )
            )
        else:
            if present_elsewhere:
                samples.append(
                    _sample(
                        meta,
                        task_type=2,
                        group="G1",
                        clip_id=clip.clip_id,
                        format="open_ended",
                        question=_pick(BEHAVIOR_QUESTIONS, seed, vid, 2, entity.entity_id, clip.clip_id).format(referring=ref),
                        answer=UNCERTAIN_ANSWER.format(referring=ref),
                        entity_ids=(entity.entity_id,),
                        seed=seed,
                    )
                )
            samples.append(
                _sample(
                    meta,
                    task_type=3,
                    group="G1",
                    clip_id=clip.clip_id,
                    format="open_ended",
                    question=_pick(PRESENCE_DESCRIBE_QUESTIONS, seed, vid, 3, entity.entity_id, clip.clip_id).format(referring=ref),
                    answer="Sorry, I'm not sure. " + UNCERTAIN_ANSWER.format(referring=ref),
                    entity_ids=(entity.entity_id,),
                    seed=seed,
                )
            )
        samples.append(
            _sample(
                meta,
                task_type=4,
                group="G1",
                clip_id=clip.clip_id,
                format="open_ended",
                question=_pick(PRESENCE_STRICT_QUESTIONS, seed, vid, 4, entity.entity_id, clip.clip_id).format(referring=ref),
                answer="Yes." if entry.present else "No.",
                entity_ids=(entity.entity_id,),
                seed=seed,
            )
        )
    return samples


def gen_temporal_order_mcq(meta: VideoMetadata, seed: int) -> list[InstructionSample]:
    """Task type 5 (group G2): order of first appearance, 4 options."""
    appearing = [e for e in meta.entities if e.entity_id in meta.first_appearance]
    distinct_clips = {meta.first_appearance[e.entity_id] for e in appearing}
    if len(appearing) < 3 or len(distinct_clips) < 3:
        return []

    ordered = sorted(appearing, key=lambda e: (meta.first_appearance[e.entity_id], e.entity_id))
    correct = tuple(e.referring for e in ordered)

    rng = random.Random(derive_seed(seed, meta.record.video_id, "order-mcq"))
    distractors: list[tuple[str, ...]] = []
    if len(correct) <= 5:
        pool = [p for p in itertools.permutations(correct) if p != correct]
        distractors = rng.sample(pool, 3)
    else:
        while len(distractors) < 3:
            p = list(correct)
            rng.shuffle(p)
            p = tuple(p)
            if p != correct and p not in distractors:
                distractors.append(p)

    correct_pos = rng.randrange(4)
    options = distractors[:correct_pos] + [correct] + distractors[correct_pos:]
    choices = tuple(", ".join(option) for option in options)
    letter = chr(ord("A") + correct_pos)
    rendered = "\n".join(
        f"({chr(ord('A') + i)}) {choice}" for i, choice in enumerate(choices)
    )

    return [
        _sample(
            meta,
            task_type=5,
            group="G2",
            clip_id=None,
            format="multiple_choice",
            question=_pick(ORDER_QUESTIONS, seed, meta.record.video_id, 5) + "\n" + rendered,
            answer=f"({letter})",
            choices=choices,
            correct_index=correct_pos,
            entity_ids=tuple(e.entity_id for e in ordered),
            seed=seed,
        )
    ]


def gen_timestamp_template_qa(meta: VideoMetadata, seed: int) -> list[InstructionSample]:
    """Task type 6 (group G5): behavior questions quoting clip boundaries."""
    samples: list[InstructionSample] = []
    vid = meta.record.video_id
    for entity in meta.entities:
        for clip in meta.clips:
            entry = meta.transcript_for(entity.entity_id, clip.clip_id)
            if entry is None:
                continue
            if not entry.present:
                present_elsewhere = any(
                    t.present and t.entity_id == entity.entity_id for t in meta.transcript
                )
                if not present_elsewhere:
                    continue
            question = _pick(RANGE_QUESTIONS, seed, vid, 6, entity.entity_id, clip.clip_id).format(
                referring=entity.referring,
                start=format_timestamp(clip.start_s),
                end=format_timestamp(clip.end_s),
            )
            answer = (
                entry.behavior
                if entry.present
                else UNCERTAIN_ANSWER.format(referring=entity.referring)
            )
            samples.append(
                _sample(
                    meta,
                    task_type=6,
                    group="G5",
                    clip_id=None,
                    format="open_ended",
                    question=question,
                    answer=answer,
                    time_refs=(TimeRef.exact(clip.start_s, clip.end_s),),
                    entity_ids=(entity.entity_id,),
                    seed=seed,
                )
            )
    return samples
