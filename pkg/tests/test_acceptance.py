"""Acceptance suite: one test per acceptance criterion, at stated tolerances.

Each test prints a single PASS line on success (run with -s to see them);
pytest failure output identifies any criterion that does not hold.
"""

from __future__ import annotations

import math
import random
import time
from collections import Counter

import numpy as np

from videoforge.backends.base import BackendConfig
from videoforge.backends.gateway import Gateway
from videoforge.backends.stub import StubBackend
from videoforge.backends.world import (
    Behavior,
    StubWorld,
    WorldObject,
    random_world,
    two_children_dog_world,
    world_to_doc,
)
from videoforge.clipper import clip_video, clustering_auto_threshold
from videoforge.masklets import generate_referring_masklets
from videoforge.cli import main as cli_main
from videoforge.dataset_io import rle_decode, rle_encode
from videoforge.metadata import VideoRecord, check_sample
from videoforge.qa.timecode import TemporalTokenizer
from videoforge.qa.yesno import build_timestamp_yesno_qa
from videoforge.region_tokens import FeatureMap, mask_pool, merge_groups
from videoforge.util import canonical_json, round_ms


def _ok(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def test_temporal_token_worked_example():
    start = time.monotonic()
    assert TemporalTokenizer(32, 90.0).to_token(19.228) == 7  # x32 convention
    assert TemporalTokenizer(31, 90.0).to_token(19.228) == 7  # M=31 convention
    assert time.monotonic() - start < 1.0
    _ok("temporal token worked example (<7> under both anchor conventions)")


def test_auto_threshold_formula_on_random_multisets():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        distances = rng.uniform(0.0, 2.0, size=n).tolist()
        got = clustering_auto_threshold(distances, 1.7)
        mean = sum(distances) / n
        std = math.sqrt(sum((x - mean) ** 2 for x in distances) / n)
        expected = min(mean + 1.7 * std, max(distances))
        assert abs(got - expected) <= 1e-9
    _ok("auto-threshold equals min(mean + 1.7*std, max) on 1,000 multisets")


def test_clip_cover_over_random_worlds():
    for seed in range(200):
        world = random_world(seed, "any")
        gateway = Gateway.stub({world.record.video_id: world}, seed=seed)
        clips = clip_video(world.record, gateway)
        assert clips, f"world {seed}: no clips"
        assert clips[0].start_s == 0.0
        assert clips[-1].end_s == round_ms(world.record.duration_s)
        for a, b in zip(clips, clips[1:]):
            assert a.end_s == b.start_s, f"world {seed}: gap at {a.end_s}"
        assert all(c.end_s > c.start_s for c in clips), f"world {seed}: zero-length clip"
    _ok("clip cover: contiguous exact cover on 200 random stub worlds")


def test_masklet_bidirectional_merge_oracle():
    for seed in range(100):
        world = random_world(seed, "frame0")
        gateway = Gateway.stub({world.record.video_id: world}, seed=seed)
        stub = StubBackend(
            {world.record.video_id: world}, BackendConfig(role="tracker", mode="stub", seed=seed)
        )
        entities = world.entities()
        result = generate_referring_masklets(world.record, entities, gateway)
        assert result.unassigned == (), f"world {seed}: unassigned {result.unassigned}"

        frames = list(range(world.record.frame_count))
        for masklet in result.masklets:
            obj = world.object_for_entity(masklet.entity_id)
            seed_det = [
                d for d in stub.detect(world.record.video_id, 0, [obj.generalized_noun])
                if d.box == obj.box
            ]
            assert seed_det, f"world {seed}: object not detected at frame 0"
            oracle = stub.track(world.record.video_id, frames, [seed_det[0]])[0]
            assert [fm.frame_index for fm in masklet.frames] == [
                fm.frame_index for fm in oracle
            ], f"world {seed}: coverage mismatch for entity {masklet.entity_id}"
            for ours, ref in zip(masklet.frames, oracle):
                assert np.array_equal(ours.mask, ref.mask), f"world {seed}: mask mismatch"

    for seed in range(100):
        world = random_world(1000 + seed, "entryexit")
        gateway = Gateway.stub({world.record.video_id: world}, seed=seed)
        entities = world.entities()
        result = generate_referring_masklets(world.record, entities, gateway)
        assert result.unassigned == ()
        for masklet in result.masklets:
            obj = world.object_for_entity(masklet.entity_id)
            expected = obj.present_frames(world.record.frame_count)
            assert list(masklet.frame_indices()) == expected, (
                f"world {seed}: entity {masklet.entity_id} coverage "
                f"{masklet.frame_indices()} != scripted {expected}"
            )
    _ok("masklet oracle: merge equals single-pass tracking; coverage equals presence")


def _disambiguation_world(seed: int) -> StubWorld:
    rng = random.Random(seed)
    record = VideoRecord(f"disamb-{seed}", 8.0, 2.0, 16, 120, 120)
    spots = [(6.0, 6.0, 40.0, 50.0), (70.0, 8.0, 110.0, 52.0), (40.0, 70.0, 80.0, 110.0)]
    rng.shuffle(spots)
    referrings = ["man in a red jacket", "man in a green coat"]
    objects = []
    for i, referring in enumerate(referrings):
        start = rng.randint(0, 6)
        end = rng.randint(10, 15)
        objects.append(
            WorldObject(
                i, referring, "man", "person", spots[i], ((start, end),),
                behaviors=(Behavior(0.0, 8.0, f"The {referring} is walking."),),
            )
        )
    return StubWorld(record=record, objects=tuple(objects))


def test_assignment_injectivity_and_disambiguation():
    for seed in range(50):
        world = _disambiguation_world(seed)
        gateway = Gateway.stub({world.record.video_id: world}, seed=seed)
        entities = world.entities()
        result = generate_referring_masklets(world.record, entities, gateway)
        assert result.unassigned == (), f"fixture {seed}: unassigned {result.unassigned}"
        seen_tracks = set()
        for masklet in result.masklets:
            obj = world.object_for_entity(masklet.entity_id)
            expected = obj.present_frames(world.record.frame_count)
            assert list(masklet.frame_indices()) == expected, f"fixture {seed}: wrong object"
            mid = masklet.frames[len(masklet.frames) // 2]
            assert np.array_equal(
                mid.mask, world.mask_for(obj, mid.frame_index)
            ), f"fixture {seed}: masklet content does not match scripted entity"
            key = tuple(masklet.frame_indices())
            box_key = (mid.mask.tobytes(),)
            assert box_key not in seen_tracks, f"fixture {seed}: assignment not injective"
            seen_tracks.add(box_key)
    _ok("assignment matches scripted ground truth on same-noun fixtures (50/50)")


def test_end_to_end_dataset_on_fixture():
    from videoforge.annotator import annotate_video
    from videoforge.qa.assemble import GenerationConfig, assemble_groups

    start = time.monotonic()
    world = two_children_dog_world()
    gateway = Gateway.stub({world.record.video_id: world}, seed=7)
    meta = annotate_video(world.record, gateway).metadata
    samples = assemble_groups(meta, gateway, GenerationConfig(), seed=7)
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"end-to-end took {elapsed:.1f}s"

    groups = Counter(s.group for s in samples)
    tasks = Counter(s.task_type for s in samples)
    assert set(groups) == {f"G{i}" for i in range(1, 9)}, f"missing groups: {groups}"
    assert set(tasks) == set(range(1, 12)), f"missing task types: {sorted(tasks)}"
    for s in samples:
        problems = check_sample(s, meta.record.duration_s)
        assert not problems, f"{s.sample_id}: {problems}"
    for s in samples:
        if s.task_type == 2:
            entry = meta.transcript_for(s.entity_ids[0], s.clip_id)
            assert entry is not None and entry.present is False
            obj = world.object_for_entity(s.entity_ids[0])
            clip = meta.clips[s.clip_id]
            assert not world.present_in_window(obj, clip.start_s, clip.end_s), (
                f"type-2 sample {s.sample_id} entity is scripted present"
            )
    _ok("end-to-end: 8 groups, 11 task types, schema-valid, scripted-absent type 2")


def test_yesno_builder_on_synthetic_files():
    rng = random.Random(123)
    for trial in range(50):
        annotations = []
        for v in range(rng.randint(1, 6)):
            duration = rng.uniform(30.0, 300.0)
            segments = []
            t = rng.uniform(0.0, 8.0)
            while t < duration - 2.0 and len(segments) < 5:
                start = round(t, 3)
                end = round(min(duration, start + rng.uniform(1.0, 20.0)), 3)
                if end - start >= 0.5:
                    segments.append(
                        {"start_s": start, "end_s": end, "description": f"event {v}-{len(segments)}"}
                    )
                t = end + rng.uniform(0.5, 40.0)
            if segments:
                annotations.append(
                    {"video_id": f"t{trial}v{v}", "duration_s": duration, "segments": segments}
                )
        if not annotations:
            continue
        samples = build_timestamp_yesno_qa(annotations, seed=trial)
        yes = sum(1 for s in samples if s.answer == "Yes")
        no = sum(1 for s in samples if s.answer == "No")
        assert abs(yes - no) <= 1, f"trial {trial}: imbalance {yes}/{no}"
        by_video = {a["video_id"]: a for a in annotations}
        for s in samples:
            if s.answer != "No":
                continue
            assert s.end_s - s.start_s >= 10.0 - 1e-9, f"trial {trial}: short negative"
            for seg in by_video[s.video_id]["segments"]:
                expanded = (seg["start_s"] - 5.0, seg["end_s"] + 5.0)
                assert s.end_s <= expanded[0] + 1e-9 or s.start_s >= expanded[1] - 1e-9, (
                    f"trial {trial}: negative intersects expanded interval"
                )
    _ok("yes/no builder: balanced, buffered, >=10 s negatives on 50 synthetic files")


def test_region_token_math():
    rng = np.random.default_rng(99)
    fuzzed = 0
    while fuzzed < 1000:
        t = int(rng.integers(2, 16))
        tokens = rng.standard_normal((t, 6))
        norms = np.linalg.norm(tokens, axis=1)
        unit = tokens / norms[:, None]
        sims = np.sum(unit[:-1] * unit[1:], axis=1)
        if len(set(np.round(sims, 12))) != len(sims):
            continue
        target = int(rng.integers(1, t + 1))
        groups = merge_groups(tokens, target)
        assert len(groups) == target
        assert [i for g in groups for i in g] == list(range(t))
        fuzzed += 1

    for _ in range(40):
        tm, d, h, w = (int(rng.integers(1, 6)) for _ in range(4))
        fm = FeatureMap(rng.standard_normal((tm, d, h, w)))
        mask = np.zeros((tm, h, w), dtype=np.uint8)
        for ti in range(tm):
            cells = rng.choice(h * w, size=int(rng.integers(1, h * w + 1)), replace=False)
            mask[ti].flat[cells] = 1
        pooled = mask_pool(fm, mask)
        for ti in range(tm):
            for di in range(d):
                acc, count = 0.0, 0
                for yi in range(h):
                    for xi in range(w):
                        if mask[ti, yi, xi]:
                            acc += fm.values[ti, di, yi, xi]
                            count += 1
                assert abs(pooled.tokens[ti, di] - acc / count) <= 1e-9

    tokens = rng.standard_normal((7, 4))
    assert merge_groups(tokens, 7) == [[i] for i in range(7)]
    _ok("region tokens: exactly L_r groups on 1,000 fuzzed inputs; pooling matches oracle")


def test_full_run_determinism(tmp_path):
    media = tmp_path / "media" / "worlds"
    media.mkdir(parents=True)
    for world in (two_children_dog_world(), random_world(33, "segments"), random_world(34, "cuts")):
        (media / f"{world.record.video_id}.json").write_text(
            canonical_json(world_to_doc(world), indent=2)
        )
    snapshots = []
    for run in ("a", "b"):
        out = tmp_path / f"out-{run}"
        args = ["--media-root", str(tmp_path / "media"), "--out", str(out), "--seed", "11"]
        assert cli_main(args + ["annotate"]) == 0
        assert cli_main(args + ["generate"]) == 0
        tree = {}
        for sub in ("metadata", "masks", "dataset"):
            for p in sorted((out / sub).rglob("*")):
                if p.is_file():
                    tree[str(p.relative_to(out))] = p.read_bytes()
        tree["manifest.json"] = (out / "manifest.json").read_bytes()
        snapshots.append(tree)
    assert snapshots[0] == snapshots[1]
    _ok("determinism: identical seed gives byte-identical metadata, masks, dataset, manifest")


def test_rle_roundtrip_large_masks():
    rng = np.random.default_rng(321)
    for _ in range(1000):
        h = int(rng.integers(1, 129))
        w = int(rng.integers(1, 129))
        density = rng.random()
        mask = (rng.random((h, w)) < density).astype(np.uint8)
        assert np.array_equal(rle_decode(rle_encode(mask), (h, w)), mask)
    _ok("RLE codec: roundtrip identity on 1,000 masks up to 128x128")
