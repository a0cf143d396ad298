"""Referring masklet generation: reorder, seed-frame selection, bidirectional
tracking with merge, and referring-expression assignment.

The scan for a good tracking start frame walks frames middle-first, since the
interesting content of short videos tends to sit away from the edges; the
first frame whose detection count reaches the number of referring expressions
wins, otherwise the best-count frame seen. Tracking then runs forward and
backward from that frame and the two half-tracks are merged per object.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .backends.base import Detection
from .errors import InvalidInput, MergeError, NoDetections
from .metadata import Entity, FrameMask, Masklet, VideoRecord

logger = logging.getLogger(__name__)

DetectFn = Callable[[int], list[Detection]]
TrackFn = Callable[[Sequence[int], Sequence[Detection]], list[list[FrameMask]]]
ReferFn = Callable[[int, Sequence[Detection], str], list[int]]


@dataclass(frozen=True)
class MaskletConfig:
    score_cutoff: float = 0.3
    # None scans every sampled frame; otherwise the Step-2 detection scan
    # visits roughly scan_fps frames per second of video.
    scan_fps: Optional[float] = 1.0
    sample_fps: Optional[float] = None  # None tracks on the native frame grid


@dataclass(frozen=True)
class ReorderedFrames:
    order: tuple[int, ...]
    original_count: int

    def __post_init__(self):
        if sorted(self.order) != list(range(self.original_count)):
            raise InvalidInput("order is not a permutation of the frame range")


@dataclass(frozen=True)
class TrackBundle:
    object_id: int
    forward: tuple[FrameMask, ...]
    backward: tuple[FrameMask, ...]
    seed_box: Detection
    seed_frame: int


@dataclass(frozen=True)
class ObjectTrack:
    """A merged masklet before any referring expression is attached."""

    object_id: int
    label: str
    seed_box: Detection
    frames: tuple[FrameMask, ...]


@dataclass(frozen=True)
class MaskletResult:
    masklets: tuple[Masklet, ...]
    unassigned: tuple[int, ...]  # entity ids without a masklet
    initial_frame: Optional[int] = None
    tracks: tuple[ObjectTrack, ...] = field(default=())


def sample_and_reorder_frames(frame_count: int) -> ReorderedFrames:
    """Breadth-first midpoint traversal: global middle first, then the
    middles of the left/right halves, and so on."""
    if frame_count < 1:
        raise InvalidInput(f"frame_count must be >= 1, got {frame_count}")
    order: list[int] = []
    queue: deque[tuple[int, int]] = deque([(0, frame_count)])
    while queue:
        lo, hi = queue.popleft()
        if lo >= hi:
            continue
        mid = (lo + hi) // 2
        order.append(mid)
        queue.append((lo, mid))
        queue.append((mid + 1, hi))
    return ReorderedFrames(tuple(order), frame_count)


def select_initial_frame(
    scan_order: Sequence[int],
    n_expressions: int,
    detect: DetectFn,
) -> tuple[int, list[Detection]]:
    """First frame (in scan order) whose detections reach the expression
    count; falls back to the max-count frame, earliest on ties."""
    if n_expressions < 1:
        raise InvalidInput("n_expressions must be >= 1")
    best_frame: Optional[int] = None
    best_detections: list[Detection] = []
    for frame in scan_order:
        detections = detect(frame)
        if len(detections) > len(best_detections):
            best_frame, best_detections = frame, detections
        if len(detections) >= n_expressions:
            return frame, detections
    if not best_detections:
        raise NoDetections("no frame produced any detection")
    return best_frame, best_detections


def bidirectional_track(
    sampled_frames: Sequence[int],
    initial_frame: int,
    seeds: Sequence[Detection],
    track: TrackFn,
) -> list[TrackBundle]:
    """Track each seed box forward over [f*, end] and backward over [f*, start]."""
    if not seeds:
        raise InvalidInput("bidirectional_track needs seed boxes")
    if initial_frame not in sampled_frames:
        raise InvalidInput(f"initial frame {initial_frame} not in the sampled sequence")
    pos = list(sampled_frames).index(initial_frame)
    forward_frames = list(sampled_frames[pos:])
    backward_frames = list(reversed(sampled_frames[: pos + 1]))

    forward_tracks = track(forward_frames, seeds)
    backward_tracks = track(backward_frames, seeds)

    bundles = []
    for i, seed in enumerate(seeds):
        bundles.append(
            TrackBundle(
                object_id=i,
                forward=tuple(sorted(forward_tracks[i], key=lambda fm: fm.frame_index)),
                backward=tuple(sorted(backward_tracks[i], key=lambda fm: fm.frame_index)),
                seed_box=seed,
                seed_frame=initial_frame,
            )
        )
    return bundles


def merge_tracking_results(bundles: Sequence[TrackBundle]) -> list[ObjectTrack]:
    """Union of backward frames (< f*) and forward frames (>= f*); the seed
    frame's mask always comes from the forward pass."""
    tracks = []
    for bundle in bundles:
        f_star = bundle.seed_frame
        if not any(fm.frame_index == f_star for fm in bundle.forward):
            raise MergeError(f"object {bundle.object_id}: forward track misses seed frame {f_star}")
        if not any(fm.frame_index == f_star for fm in bundle.backward):
            raise MergeError(f"object {bundle.object_id}: backward track misses seed frame {f_star}")
        merged: dict[int, FrameMask] = {
            fm.frame_index: fm for fm in bundle.backward if fm.frame_index < f_star
        }
        for fm in bundle.forward:
            if fm.frame_index >= f_star:
                merged[fm.frame_index] = fm
        frames = tuple(merged[fi] for fi in sorted(merged))
        tracks.append(
            ObjectTrack(
                object_id=bundle.object_id,
                label=bundle.seed_box.label,
                seed_box=bundle.seed_box,
                frames=frames,
            )
        )
    return tracks


def assign_expressions(
    initial_frame: int,
    tracks: Sequence[ObjectTrack],
    entities: Sequence[Entity],
    refer: ReferFn,
) -> tuple[dict[int, int], list[int]]:
    """One-to-one mapping entity_id -> object_id within each noun group.

    A group with a single candidate and a single entity is assigned directly;
    otherwise the referrer ranks candidates per entity and picks are taken
    greedily, skipping candidates already claimed. An entity whose picks are
    all taken still gets the last remaining candidate when that choice is
    forced; anything else is reported unassigned.
    """
    groups: dict[str, list[ObjectTrack]] = {}
    for track in tracks:
        groups.setdefault(track.label, []).append(track)

    assignment: dict[int, int] = {}
    unassigned: list[int] = []
    taken: set[int] = set()

    for noun in sorted(groups):
        group = groups[noun]
        group_entities = [e for e in entities if e.generalized_noun == noun]
        if len(group) == 1 and len(group_entities) == 1:
            assignment[group_entities[0].entity_id] = group[0].object_id
            taken.add(group[0].object_id)
            continue
        for entity in group_entities:
            picks = refer(initial_frame, [t.seed_box for t in group], entity.referring)
            chosen: Optional[ObjectTrack] = None
            for pick in picks:
                if 0 <= pick < len(group) and group[pick].object_id not in taken:
                    chosen = group[pick]
                    break
            if chosen is None:
                remaining = [t for t in group if t.object_id not in taken]
                if len(remaining) == 1:
                    chosen = remaining[0]
            if chosen is None:
                unassigned.append(entity.entity_id)
            else:
                assignment[entity.entity_id] = chosen.object_id
                taken.add(chosen.object_id)

    for entity in entities:
        if entity.entity_id not in assignment and entity.entity_id not in unassigned:
            unassigned.append(entity.entity_id)
    return assignment, sorted(unassigned)


def sampled_frame_indexes(record: VideoRecord, sample_fps: Optional[float]) -> list[int]:
    if sample_fps is None or sample_fps >= record.fps:
        return list(range(record.frame_count))
    out: list[int] = []
    k = 0
    while True:
        t = k / sample_fps
        if t >= record.duration_s:
            break
        idx = record.frame_at(t)
        if not out or idx != out[-1]:
            out.append(idx)
        k += 1
    return out or [0]


def generate_referring_masklets(
    record: VideoRecord,
    entities: Sequence[Entity],
    gateway,
    config: MaskletConfig = MaskletConfig(),
) -> MaskletResult:
    """Run the four-step pipeline and align masklets to entities."""
    if not entities:
        return MaskletResult((), ())

    sampled = sampled_frame_indexes(record, config.sample_fps)
    reordered = sample_and_reorder_frames(len(sampled))
    scan_order = [sampled[p] for p in reordered.order]
    if config.scan_fps is not None and config.scan_fps < record.fps:
        stride = max(1, round(record.fps / config.scan_fps))
        scan_order = scan_order[::stride]

    nouns = sorted({e.generalized_noun for e in entities})

    def detect(frame_index: int) -> list[Detection]:
        dets = gateway.detect(record.video_id, frame_index, nouns)
        return [d for d in dets if d.score >= config.score_cutoff]

    initial_frame, detections = select_initial_frame(scan_order, len(entities), detect)

    bundles = bidirectional_track(
        sampled,
        initial_frame,
        detections,
        track=lambda frames, seeds: gateway.track(record.video_id, frames, seeds),
    )
    tracks = merge_tracking_results(bundles)

    assignment, unassigned = assign_expressions(
        initial_frame,
        tracks,
        entities,
        refer=lambda fi, boxes, ref: gateway.resolve_reference(record.video_id, fi, boxes, ref),
    )

    track_by_id = {t.object_id: t for t in tracks}
    masklets = []
    for entity_id, object_id in sorted(assignment.items()):
        frames = track_by_id[object_id].frames
        if frames:
            masklets.append(Masklet(entity_id=entity_id, frames=frames))
        else:
            unassigned.append(entity_id)
    if unassigned:
        logger.info("%s: entities without masklets: %s", record.video_id, sorted(unassigned))
    return MaskletResult(
        masklets=tuple(masklets),
        unassigned=tuple(sorted(unassigned)),
        initial_frame=initial_frame,
        tracks=tuple(tracks),
    )
