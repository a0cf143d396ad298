from __future__ import annotations

import random

import pytest

from videoforge.errors import InvalidInput
from videoforge.qa.timecode import TemporalTokenizer
from videoforge.qa.yesno import (
    build_timestamp_yesno_qa,
    complement_gaps,
    merge_intervals,
)


def _ann(video_id, duration, segments):
    return {
        "video_id": video_id,
        "duration_s": duration,
        "segments": [
            {"start_s": s, "end_s": e, "description": d} for s, e, d in segments
        ],
    }


def test_question_matches_verbatim_template():
    samples = build_timestamp_yesno_qa(
        [_ann("v", 60.0, [(20.0, 40.0, "A dog fetches a stick")])], seed=1
    )
    positives = [s for s in samples if s.answer == "Yes"]
    assert positives
    q = positives[0].question
    assert q.startswith(
        "Does the following description accurately reflect what happens in the "
        "video between 00:00:20.000 and 00:00:40.000? Description: A dog fetches "
        "a stick. Respond with 'Yes' or 'No' only."
    )


def test_interval_arithmetic_worked_example():
    # annotation [20, 40] on a 60 s video: excluded [15, 45]; gaps [0,15], [45,60]
    excluded = merge_intervals([(15_000, 45_000)])
    gaps = complement_gaps(excluded, 60_000)
    assert gaps == [(0, 15_000), (45_000, 60_000)]
    assert all(g[1] - g[0] >= 10_000 for g in gaps)

    samples = build_timestamp_yesno_qa(
        [_ann("v", 60.0, [(20.0, 40.0, "A dog fetches a stick")])], seed=3
    )
    negatives = [s for s in samples if s.answer == "No"]
    assert len(negatives) == 1
    neg = negatives[0]
    assert neg.end_s - neg.start_s >= 10.0 - 1e-9
    assert neg.end_s <= 15.0 + 1e-9 or neg.start_s >= 45.0 - 1e-9


def test_full_cover_annotation_gives_no_negative():
    samples = build_timestamp_yesno_qa(
        [_ann("v", 30.0, [(0.0, 30.0, "Everything happens")])], seed=1
    )
    # no gap -> no negative -> positives downsampled to zero for balance
    assert [s for s in samples if s.answer == "No"] == []
    assert [s for s in samples if s.answer == "Yes"] == []


def test_balance_within_one_mixed_corpus():
    rng = random.Random(5)
    annotations = []
    for i in range(50):
        duration = rng.uniform(40.0, 120.0)
        segments = []
        t = rng.uniform(0.0, 10.0)
        for j in range(rng.randint(1, 3)):
            start = round(t, 3)
            end = round(min(duration, start + rng.uniform(2.0, 15.0)), 3)
            if end - start < 1.0:
                break
            segments.append((start, end, f"Event {i}-{j} unfolds"))
            t = end + rng.uniform(1.0, 20.0)
            if t >= duration - 1.0:
                break
        if segments:
            annotations.append(_ann(f"v{i:03d}", duration, segments))
    samples = build_timestamp_yesno_qa(annotations, seed=9)
    yes = sum(1 for s in samples if s.answer == "Yes")
    no = sum(1 for s in samples if s.answer == "No")
    assert abs(yes - no) <= 1
    assert yes + no > 0


def test_negatives_never_intersect_expanded_intervals():
    rng = random.Random(6)
    for i in range(30):
        duration = rng.uniform(50.0, 200.0)
        segments = []
        t = 0.0
        while t < duration - 12.0 and len(segments) < 4:
            start = round(t + rng.uniform(0.0, 8.0), 3)
            end = round(min(duration, start + rng.uniform(1.0, 10.0)), 3)
            if end - start >= 1.0:
                segments.append((start, end, f"Moment {len(segments)}"))
            t = end + rng.uniform(5.0, 30.0)
        if not segments:
            continue
        ann = _ann(f"w{i:03d}", duration, segments)
        for s in build_timestamp_yesno_qa([ann], seed=i):
            if s.answer != "No":
                continue
            assert s.end_s - s.start_s >= 10.0 - 1e-9
            for start, end, _ in segments:
                assert s.end_s <= start - 5.0 + 1e-9 or s.start_s >= end + 5.0 - 1e-9


def test_bad_annotation_rejected():
    with pytest.raises(InvalidInput):
        build_timestamp_yesno_qa([_ann("v", 10.0, [(5.0, 20.0, "Out of range")])], seed=0)
    with pytest.raises(InvalidInput):
        build_timestamp_yesno_qa([_ann("v", 10.0, [(1.0, 5.0, "  ")])], seed=0)


def test_temporal_token_rendering():
    tok = TemporalTokenizer(31, 90.0)
    samples = build_timestamp_yesno_qa(
        [_ann("v", 90.0, [(19.228, 40.0, "A crane lifts a beam")])], seed=1, tokenizer=tok
    )
    positives = [s for s in samples if s.answer == "Yes"]
    assert positives and "between <7> and <14>?" in positives[0].question


def test_determinism():
    ann = [_ann("v", 80.0, [(10.0, 20.0, "First"), (50.0, 60.0, "Second")])]
    a = build_timestamp_yesno_qa(ann, seed=4)
    b = build_timestamp_yesno_qa(ann, seed=4)
    assert a == b
