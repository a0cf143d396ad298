"""Timestamp yes/no QA built from highlight annotations.

Positives quote an annotated segment verbatim; negatives pick a seeded
window of at least 10 seconds from the timeline gaps left after expanding
every annotated interval by a 5-second buffer on both sides and merging.
All interval arithmetic runs on integer milliseconds, so negatives can never
touch an expanded interval. Output labels are balanced by downsampling
positives globally to the negative count.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .. import prompts
from ..errors import InvalidInput
from ..util import derive_seed
from .timecode import TemporalTokenizer, format_timestamp

logger = logging.getLogger(__name__)

BUFFER_MS = 5_000
MIN_NEGATIVE_MS = 10_000


@dataclass(frozen=True)
class YesNoSample:
    sample_id: str
    video_id: str
    question: str
    answer: str  # "Yes" | "No"
    start_s: float
    end_s: float
    seed: int


def merge_intervals(intervals: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    merged: list[tuple[int, int]] = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def complement_gaps(excluded: Sequence[tuple[int, int]], duration_ms: int) -> list[tuple[int, int]]:
    gaps = []
    cursor = 0
    for start, end in excluded:
        if start > cursor:
            gaps.append((cursor, start))
        cursor = max(cursor, end)
    if cursor < duration_ms:
        gaps.append((cursor, duration_ms))
    return gaps


def _render(t_ms: int, duration_s: float, tokenizer: Optional[TemporalTokenizer]) -> str:
    if tokenizer is not None:
        return tokenizer.token_text(t_ms / 1000.0)
    return format_timestamp(t_ms / 1000.0)


def build_timestamp_yesno_qa(
    annotations: Sequence[dict],
    seed: int,
    tokenizer: Optional[TemporalTokenizer] = None,
) -> list[YesNoSample]:
    """Balanced yes/no samples from {video_id, duration_s, segments} rows."""
    positives: list[YesNoSample] = []
    negatives: list[YesNoSample] = []

    for ann in sorted(annotations, key=lambda a: a["video_id"]):
        video_id = ann["video_id"]
        duration_ms = int(round(float(ann["duration_s"]) * 1000))
        segments = ann["segments"]
        descriptions = []
        seg_ms: list[tuple[int, int]] = []
        for i, seg in enumerate(segments):
            start_ms = int(round(float(seg["start_s"]) * 1000))
            end_ms = int(round(float(seg["end_s"]) * 1000))
            desc = seg["description"]
            if not (0 <= start_ms < end_ms <= duration_ms):
                raise InvalidInput(
                    f"{video_id}: segment [{seg['start_s']}, {seg['end_s']}] outside video"
                )
            if not desc.strip():
                raise InvalidInput(f"{video_id}: empty description in segment {i}")
            seg_ms.append((start_ms, end_ms))
            descriptions.append(desc)
            positives.append(
                YesNoSample(
                    sample_id=f"{video_id}:yes:{i:04d}",
                    video_id=video_id,
                    question=prompts.YESNO_QUESTION.format(
                        start_time=_render(start_ms, ann["duration_s"], tokenizer),
                        end_time=_render(end_ms, ann["duration_s"], tokenizer),
                        description=desc,
                    ),
                    answer="Yes",
                    start_s=start_ms / 1000.0,
                    end_s=end_ms / 1000.0,
                    seed=seed,
                )
            )

        excluded = merge_intervals(
            [(max(0, s - BUFFER_MS), min(duration_ms, e + BUFFER_MS)) for s, e in seg_ms]
        )
        gaps = [g for g in complement_gaps(excluded, duration_ms) if g[1] - g[0] >= MIN_NEGATIVE_MS]
        if not gaps:
            logger.info("%s: no gap admits a negative sample", video_id)
            continue
        for i in range(len(seg_ms)):
            rng = random.Random(derive_seed(seed, video_id, "negative", i))
            gap_start, gap_end = gaps[rng.randrange(len(gaps))]
            start_ms = gap_start + rng.randrange(gap_end - MIN_NEGATIVE_MS - gap_start + 1)
            length_ms = MIN_NEGATIVE_MS + rng.randrange(gap_end - start_ms - MIN_NEGATIVE_MS + 1)
            end_ms = start_ms + length_ms
            desc = descriptions[rng.randrange(len(descriptions))]
            negatives.append(
                YesNoSample(
                    sample_id=f"{video_id}:no:{i:04d}",
                    video_id=video_id,
                    question=prompts.YESNO_QUESTION.format(
                        start_time=_render(start_ms, ann["duration_s"], tokenizer),
                        end_time=_render(end_ms, ann["duration_s"], tokenizer),
                        description=desc,
                    ),
                    answer="No",
                    start_s=start_ms / 1000.0,
                    end_s=end_ms / 1000.0,
                    seed=seed,
                )
            )

    if len(positives) > len(negatives):
        rng = random.Random(derive_seed(seed, "yesno-balance"))
        keep = sorted(rng.sample(range(len(positives)), len(negatives)))
        positives = [positives[i] for i in keep]
    return sorted(positives + negatives, key=lambda s: (s.video_id, s.sample_id))
