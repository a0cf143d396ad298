from __future__ import annotations

import numpy as np
import pytest

from videoforge.backends.base import Detection
from videoforge.backends.gateway import Gateway
from videoforge.backends.world import StubWorld, WorldObject, random_world
from videoforge.errors import InvalidInput, MergeError, NoDetections
from videoforge.masklets import (
    MaskletConfig,
    ObjectTrack,
    TrackBundle,
    assign_expressions,
    bidirectional_track,
    generate_referring_masklets,
    merge_tracking_results,
    sample_and_reorder_frames,
    select_initial_frame,
)
from videoforge.metadata import Entity, FrameMask, VideoRecord


def _det(x0=0.0, label="person", score=0.9):
    return Detection(label, (x0, 0.0, x0 + 10.0, 10.0), score)


def _fm(frame, fill=1):
    return FrameMask(frame, np.full((4, 4), fill, dtype=np.uint8))


# ---------------------------------------------------------------------------
# sample_and_reorder_frames
# ---------------------------------------------------------------------------

def test_reorder_singleton():
    assert sample_and_reorder_frames(1).order == (0,)


def test_reorder_two_frames():
    assert sample_and_reorder_frames(2).order == (1, 0)


def test_reorder_five_frames_traced_by_hand():
    assert sample_and_reorder_frames(5).order == (2, 1, 4, 0, 3)


def test_reorder_is_bijection_and_middle_first():
    for n in (1, 2, 3, 7, 16, 97):
        reordered = sample_and_reorder_frames(n)
        assert sorted(reordered.order) == list(range(n))
        assert reordered.order[0] == n // 2


def test_reorder_rejects_empty():
    with pytest.raises(InvalidInput):
        sample_and_reorder_frames(0)


# ---------------------------------------------------------------------------
# select_initial_frame
# ---------------------------------------------------------------------------

def _counts_detect(counts):
    def detect(frame):
        return [_det(10.0 * i) for i in range(counts[frame])]

    return detect


def test_select_first_frame_meeting_threshold():
    counts = {0: 1, 1: 3, 2: 2, 3: 3}
    frame, dets = select_initial_frame([0, 1, 2, 3], 3, _counts_detect(counts))
    assert frame == 1
    assert len(dets) == 3


def test_select_fallback_max_count_earliest_tie():
    counts = {5: 0, 2: 1, 8: 1, 1: 1}
    frame, dets = select_initial_frame([5, 2, 8, 1], 2, _counts_detect(counts))
    assert frame == 2
    assert len(dets) == 1


def test_select_immediate_satisfaction():
    counts = {4: 1}
    frame, dets = select_initial_frame([4], 1, _counts_detect(counts))
    assert frame == 4 and len(dets) == 1


def test_select_no_detections_anywhere():
    with pytest.raises(NoDetections):
        select_initial_frame([0, 1, 2], 1, _counts_detect({0: 0, 1: 0, 2: 0}))


def test_select_fallback_returns_overall_max_count():
    import random

    for seed in range(30):
        rng = random.Random(seed)
        n = rng.randint(3, 20)
        n_expr = rng.randint(3, 6)
        counts = {f: rng.randint(0, n_expr - 1) for f in range(n)}
        if max(counts.values()) == 0:
            continue
        order = list(range(n))
        rng.shuffle(order)
        frame, dets = select_initial_frame(order, n_expr, _counts_detect(counts))
        assert len(dets) == max(counts.values())
        earlier = order[: order.index(frame)]
        assert all(counts[f] < len(dets) for f in earlier)


# ---------------------------------------------------------------------------
# bidirectional_track / merge_tracking_results
# ---------------------------------------------------------------------------

def _world_track(world):
    from videoforge.backends.base import BackendConfig
    from videoforge.backends.stub import StubBackend

    stub = StubBackend({world.record.video_id: world}, BackendConfig(role="tracker", mode="stub"))
    return lambda frames, seeds: stub.track(world.record.video_id, frames, seeds)


def test_bidirectional_from_frame_zero_equals_forward():
    record = VideoRecord("v", 5.0, 2.0, 10, 32, 32)
    obj = WorldObject(0, "red ball", "ball", "ball", (5.0, 5.0, 15.0, 15.0), ((0, 9),))
    world = StubWorld(record=record, objects=(obj,))
    track = _world_track(world)
    seed = Detection("ball", obj.box, 0.9)
    bundles = bidirectional_track(list(range(10)), 0, [seed], track)
    assert [fm.frame_index for fm in bundles[0].backward] == [0]
    merged = merge_tracking_results(bundles)
    forward_only = track(list(range(10)), [seed])[0]
    assert [fm.frame_index for fm in merged[0].frames] == [fm.frame_index for fm in forward_only]


def test_bidirectional_from_last_frame_degenerate():
    record = VideoRecord("v", 5.0, 2.0, 10, 32, 32)
    obj = WorldObject(0, "red ball", "ball", "ball", (5.0, 5.0, 15.0, 15.0), ((0, 9),))
    world = StubWorld(record=record, objects=(obj,))
    bundles = bidirectional_track(
        list(range(10)), 9, [Detection("ball", obj.box, 0.9)], _world_track(world)
    )
    assert [fm.frame_index for fm in bundles[0].forward] == [9]
    assert len(bundles[0].backward) == 10


def test_bidirectional_partial_presence():
    record = VideoRecord("v", 6.0, 2.0, 12, 32, 32)
    obj = WorldObject(0, "red ball", "ball", "ball", (5.0, 5.0, 15.0, 15.0), ((2, 9),))
    world = StubWorld(record=record, objects=(obj,))
    bundles = bidirectional_track(
        list(range(12)), 5, [Detection("ball", obj.box, 0.9)], _world_track(world)
    )
    assert [fm.frame_index for fm in bundles[0].forward] == list(range(5, 10))
    assert [fm.frame_index for fm in bundles[0].backward] == list(range(2, 6))
    merged = merge_tracking_results(bundles)
    assert [fm.frame_index for fm in merged[0].frames] == list(range(2, 10))


def test_merge_prefers_forward_mask_on_seed_frame():
    bundle = TrackBundle(
        object_id=0,
        forward=(_fm(5, fill=1), _fm(6, fill=1)),
        backward=(_fm(4, fill=2), _fm(5, fill=2)),
        seed_box=_det(),
        seed_frame=5,
    )
    merged = merge_tracking_results([bundle])[0]
    assert [fm.frame_index for fm in merged.frames] == [4, 5, 6]
    by_frame = {fm.frame_index: fm.mask for fm in merged.frames}
    assert by_frame[5][0, 0] == 1  # forward wins on the seed frame
    assert by_frame[4][0, 0] == 2


def test_merge_missing_seed_frame_raises():
    bundle = TrackBundle(
        object_id=0,
        forward=(_fm(6),),
        backward=(_fm(4), _fm(5)),
        seed_box=_det(),
        seed_frame=5,
    )
    with pytest.raises(MergeError):
        merge_tracking_results([bundle])


# ---------------------------------------------------------------------------
# assign_expressions
# ---------------------------------------------------------------------------

def _track(object_id, label, x0):
    return ObjectTrack(object_id, label, _det(x0, label), (_fm(0),))


def test_assign_single_candidate_direct():
    tracks = [_track(0, "dog", 0.0)]
    entities = [Entity(0, "dog with a red leash", "dog", "dog")]
    assignment, unassigned = assign_expressions(0, tracks, entities, refer=lambda *a: [])
    assert assignment == {0: 0} and unassigned == []


def test_assign_disjoint_picks():
    tracks = [_track(0, "person", 0.0), _track(1, "person", 20.0)]
    entities = [
        Entity(0, "child in a white T-shirt", "child", "person"),
        Entity(1, "child in a pink top", "child", "person"),
    ]
    replies = {"child in a white T-shirt": [0], "child in a pink top": [1]}
    assignment, unassigned = assign_expressions(
        0, tracks, entities, refer=lambda fi, boxes, ref: replies[ref]
    )
    assert assignment == {0: 0, 1: 1} and unassigned == []


def test_assign_conflict_falls_back_to_remaining():
    tracks = [_track(0, "person", 0.0), _track(1, "person", 20.0)]
    entities = [
        Entity(0, "child in a white T-shirt", "child", "person"),
        Entity(1, "child in a pink top", "child", "person"),
    ]
    assignment, unassigned = assign_expressions(
        0, tracks, entities, refer=lambda fi, boxes, ref: [0]
    )
    assert assignment == {0: 0, 1: 1} and unassigned == []


def test_assign_conflict_without_forced_choice_unassigned():
    tracks = [_track(0, "person", 0.0), _track(1, "person", 20.0), _track(2, "person", 40.0)]
    entities = [
        Entity(0, "child in a white T-shirt", "child", "person"),
        Entity(1, "child in a pink top", "child", "person"),
    ]
    assignment, unassigned = assign_expressions(
        0, tracks, entities, refer=lambda fi, boxes, ref: [0]
    )
    assert assignment == {0: 0} and unassigned == [1]


def test_assign_injective_over_random_worlds():
    for seed in range(20):
        world = random_world(seed, "entryexit")
        gateway = Gateway.stub({world.record.video_id: world}, seed=seed)
        entities = world.entities()
        result = generate_referring_masklets(world.record, entities, gateway)
        objects = {}
        for masklet in result.masklets:
            key = tuple(fm.frame_index for fm in masklet.frames)
            # injectivity: two entities never share identical full tracks
            assert masklet.entity_id not in objects
            objects[masklet.entity_id] = key


# ---------------------------------------------------------------------------
# generate_referring_masklets
# ---------------------------------------------------------------------------

def test_generate_on_fixture_world(fixture_world, stub_gateway):
    entities = fixture_world.entities()
    result = generate_referring_masklets(fixture_world.record, entities, stub_gateway)
    assert result.unassigned == ()
    assert len(result.masklets) == 3
    by_entity = {m.entity_id: m.frame_indices() for m in result.masklets}
    assert by_entity[0] == tuple(range(0, 27))
    assert by_entity[1] == tuple(range(11, 27))
    assert by_entity[2] == tuple(range(19, 27))


def test_generate_entity_never_detected_reported_unassigned(fixture_world, stub_gateway):
    entities = fixture_world.entities() + [Entity(3, "invisible cat", "cat", "cat")]
    result = generate_referring_masklets(fixture_world.record, entities, stub_gateway)
    assert 3 in result.unassigned
    assert {m.entity_id for m in result.masklets} == {0, 1, 2}


def test_generate_mid_entry_first_frame_respects_schedule(fixture_world, stub_gateway):
    entities = fixture_world.entities()
    result = generate_referring_masklets(fixture_world.record, entities, stub_gateway)
    pink = [m for m in result.masklets if m.entity_id == 1][0]
    assert pink.frames[0].frame_index == 11


def test_scan_stride_config():
    world = random_world(7, "frame0")
    gateway = Gateway.stub({world.record.video_id: world}, seed=7)
    entities = world.entities()
    full = generate_referring_masklets(
        world.record, entities, gateway, MaskletConfig(scan_fps=None)
    )
    strided = generate_referring_masklets(
        world.record, entities, gateway, MaskletConfig(scan_fps=1.0)
    )
    assert {m.entity_id for m in full.masklets} == {m.entity_id for m in strided.masklets}
