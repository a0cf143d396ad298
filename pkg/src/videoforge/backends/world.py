"""Scripted scenario worlds backing the deterministic stub backends.

A world declares the video record, per-object boxes and presence schedules,
scene cuts, semantic segments for the embedder, and canned text responses.
All stub backends read the same world, so every pipeline stage can be checked
against one consistent ground truth end to end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..metadata import Entity, VideoRecord
from ..util import round_ms
from .base import Detection


@dataclass(frozen=True)
class Behavior:
    start_s: float
    end_s: float
    text: str


@dataclass(frozen=True)
class WorldObject:
    object_id: int
    referring: str
    noun: str
    generalized_noun: str
    box: tuple[float, float, float, float]
    present: tuple[tuple[int, int], ...]  # inclusive frame ranges
    score: float = 0.9
    is_entity: bool = True
    behaviors: tuple[Behavior, ...] = ()

    def present_on(self, frame_index: int) -> bool:
        return any(lo <= frame_index <= hi for lo, hi in self.present)

    def present_frames(self, frame_count: int) -> list[int]:
        out: list[int] = []
        for lo, hi in self.present:
            out.extend(range(max(lo, 0), min(hi, frame_count - 1) + 1))
        return sorted(set(out))


@dataclass(frozen=True)
class SceneCut:
    t: float
    strength: float = 27.0


@dataclass(frozen=True)
class StubWorld:
    record: VideoRecord
    objects: tuple[WorldObject, ...]
    cuts: tuple[SceneCut, ...] = ()
    segments_s: tuple[tuple[float, float], ...] = ()
    embed_dim: int = 16
    paragraph: str | None = None
    referrer_overrides: dict[str, tuple[int, ...]] = field(default_factory=dict)
    canned: dict[str, str] = field(default_factory=dict)

    # -- entities ----------------------------------------------------------

    def entity_objects(self) -> list[WorldObject]:
        return [o for o in self.objects if o.is_entity]

    def entities(self) -> list[Entity]:
        """Ground-truth entities in parser output order (entity_id = order)."""
        return [
            Entity(i, o.referring, o.noun, o.generalized_noun)
            for i, o in enumerate(self.entity_objects())
        ]

    def object_for_entity(self, entity_id: int) -> WorldObject:
        return self.entity_objects()[entity_id]

    def paragraph_text(self) -> str:
        if self.paragraph:
            return self.paragraph
        names = [o.referring for o in self.entity_objects()]
        if not names:
            return "The video shows a static scene with no clearly active entities."
        listing = "; ".join(f"a {n}" for n in names)
        return (
            "Several active entities are visible in the video: "
            + listing
            + ". Each one moves or interacts with the scene over time."
        )

    def parser_lists(self) -> dict:
        ents = self.entity_objects()
        return {
            "referrings": [o.referring for o in ents],
            "nouns": [o.noun for o in ents],
            "generalized": [o.generalized_noun for o in ents],
        }

    # -- geometry ----------------------------------------------------------

    def mask_for(self, obj: WorldObject, frame_index: int) -> np.ndarray | None:
        if not obj.present_on(frame_index):
            return None
        h, w = self.record.height_px, self.record.width_px
        mask = np.zeros((h, w), dtype=np.uint8)
        x0, y0, x1, y1 = obj.box
        xi0, yi0 = max(int(x0), 0), max(int(y0), 0)
        xi1, yi1 = min(int(np.ceil(x1)), w), min(int(np.ceil(y1)), h)
        mask[yi0:max(yi1, yi0 + 1), xi0:max(xi1, xi0 + 1)] = 1
        return mask

    def detections_on(self, frame_index: int, labels) -> list[Detection]:
        label_set = set(labels)
        dets = [
            Detection(o.generalized_noun, o.box, o.score)
            for o in self.objects
            if o.generalized_noun in label_set and o.present_on(frame_index)
        ]
        dets.sort(key=lambda d: (-d.score, d.box[0], d.box[1]))
        return dets

    # -- timing ------------------------------------------------------------

    def segments(self) -> tuple[tuple[float, float], ...]:
        if self.segments_s:
            return self.segments_s
        return ((0.0, self.record.duration_s),)

    def segment_of(self, t: float) -> int:
        segs = self.segments()
        for i, (lo, hi) in enumerate(segs):
            if lo <= t < hi:
                return i
        return len(segs) - 1

    def present_in_window(self, obj: WorldObject, start_s: float, end_s: float) -> bool:
        f0 = self.record.frame_at(start_s)
        f1 = self.record.frame_at(max(end_s - 1e-9, start_s))
        return any(obj.present_on(f) for f in range(f0, f1 + 1))

    def behavior_in_window(self, obj: WorldObject, start_s: float, end_s: float) -> str:
        best: Behavior | None = None
        best_overlap = 0.0
        for b in obj.behaviors:
            overlap = min(b.end_s, end_s) - max(b.start_s, start_s)
            if overlap > best_overlap + 1e-9:
                best, best_overlap = b, overlap
        if best is not None:
            return best.text
        return f"The {obj.referring} is visible and moving around."


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------

def world_to_doc(world: StubWorld) -> dict:
    return {
        "video": {
            "video_id": world.record.video_id,
            "duration_s": float(world.record.duration_s),
            "fps": float(world.record.fps),
            "frame_count": world.record.frame_count,
            "width_px": world.record.width_px,
            "height_px": world.record.height_px,
        },
        "scene_cuts": [{"t": float(c.t), "strength": float(c.strength)} for c in world.cuts],
        "segments_s": [[float(a), float(b)] for a, b in world.segments_s],
        "embed_dim": world.embed_dim,
        "paragraph": world.paragraph,
        "objects": [
            {
                "object_id": o.object_id,
                "referring": o.referring,
                "noun": o.noun,
                "generalized_noun": o.generalized_noun,
                "box": list(o.box),
                "present": [list(r) for r in o.present],
                "score": float(o.score),
                "is_entity": o.is_entity,
                "behaviors": [
                    {"start_s": float(b.start_s), "end_s": float(b.end_s), "text": b.text}
                    for b in o.behaviors
                ],
            }
            for o in world.objects
        ],
        "referrer_overrides": {k: list(v) for k, v in world.referrer_overrides.items()},
        "canned": dict(world.canned),
    }


def world_from_doc(doc: dict) -> StubWorld:
    return StubWorld(
        record=VideoRecord(**doc["video"]),
        objects=tuple(
            WorldObject(
                object_id=o["object_id"],
                referring=o["referring"],
                noun=o["noun"],
                generalized_noun=o["generalized_noun"],
                box=tuple(o["box"]),
                present=tuple(tuple(r) for r in o["present"]),
                score=o.get("score", 0.9),
                is_entity=o.get("is_entity", True),
                behaviors=tuple(Behavior(**b) for b in o.get("behaviors", [])),
            )
            for o in doc["objects"]
        ),
        cuts=tuple(SceneCut(c["t"], c.get("strength", 27.0)) for c in doc.get("scene_cuts", [])),
        segments_s=tuple(tuple(s) for s in doc.get("segments_s", [])),
        embed_dim=doc.get("embed_dim", 16),
        paragraph=doc.get("paragraph"),
        referrer_overrides={k: tuple(v) for k, v in doc.get("referrer_overrides", {}).items()},
        canned=dict(doc.get("canned", {})),
    )


def load_world(path: Path) -> StubWorld:
    return world_from_doc(json.loads(Path(path).read_text("utf-8")))


def load_world_dir(path: Path) -> dict[str, StubWorld]:
    worlds = {}
    for p in sorted(Path(path).glob("*.json")):
        w = load_world(p)
        worlds[w.record.video_id] = w
    return worlds


# ---------------------------------------------------------------------------
# Canonical fixtures and random world generation for property tests
# ---------------------------------------------------------------------------

def two_children_dog_world() -> StubWorld:
    """Three-entity fixture: two same-noun children plus a dog, staggered entries."""
    record = VideoRecord("fixture-children-dog", 9.0, 3.0, 27, 128, 112)
    objects = (
        WorldObject(
            0,
            "child in a white T-shirt",
            "child",
            "person",
            (8.0, 10.0, 40.0, 60.0),
            ((0, 26),),
            behaviors=(
                Behavior(0.0, 6.0, "The child in a white T-shirt is running across the yard."),
                Behavior(6.0, 9.0, "The child in a white T-shirt is chasing the dog."),
            ),
        ),
        WorldObject(
            1,
            "child in a pink top",
            "child",
            "person",
            (50.0, 12.0, 80.0, 58.0),
            ((11, 26),),
            behaviors=(
                Behavior(3.5, 9.0, "The child in a pink top is waving both hands."),
            ),
        ),
        WorldObject(
            2,
            "dog with a red leash",
            "dog",
            "dog",
            (30.0, 64.0, 90.0, 100.0),
            ((19, 26),),
            behaviors=(
                Behavior(6.0, 9.0, "The dog with a red leash is running after the child."),
            ),
        ),
    )
    return StubWorld(
        record=record,
        objects=objects,
        cuts=(SceneCut(3.0), SceneCut(6.0)),
        segments_s=((0.0, 3.0), (3.0, 6.0), (6.0, 9.0)),
        paragraph=(
            "In this video, a child in a white T-shirt runs across a yard. "
            "Later a child in a pink top appears and waves, and near the end a "
            "dog with a red leash runs after the first child. Active entities: "
            "a child in a white T-shirt; a child in a pink top; a dog with a red leash."
        ),
    )


_CATALOG = (
    ("man in a red jacket", "man", "person"),
    ("woman in a yellow coat", "woman", "person"),
    ("child in a striped shirt", "child", "person"),
    ("man with a blue backpack", "man", "person"),
    ("dog with a blue collar", "dog", "dog"),
    ("cat on the windowsill", "cat", "cat"),
    ("bird with white wings", "bird", "bird"),
    ("red ball", "ball", "ball"),
)

_ACTIONS = (
    "walking along the path",
    "turning around slowly",
    "moving toward the camera",
    "interacting with another entity",
    "picking something up",
)


def _grid_boxes(rng: np.random.Generator, count: int, width: int, height: int):
    """Disjoint boxes from a 3x3 grid so IoU matching is unambiguous."""
    cells = [(r, c) for r in range(3) for c in range(3)]
    chosen = rng.choice(len(cells), size=count, replace=False)
    boxes = []
    cw, ch = width / 3.0, height / 3.0
    for idx in chosen:
        r, c = cells[int(idx)]
        pad_x, pad_y = cw * 0.15, ch * 0.15
        boxes.append(
            (
                round(c * cw + pad_x, 1),
                round(r * ch + pad_y, 1),
                round((c + 1) * cw - pad_x, 1),
                round((r + 1) * ch - pad_y, 1),
            )
        )
    return boxes


def random_world(seed: int, kind: str = "any") -> StubWorld:
    """Generate a valid random world.

    kind:
      "cuts"      scripted scene cuts (scene-detector path)
      "segments"  no cuts, dominant-first semantic segments (clustering path)
      "flat"      no cuts, single segment (may be shorter than 3 s)
      "frame0"    all objects visible from frame 0 through the middle frame
      "entryexit" objects enter/exit but overlap the middle frame
      "any"       one of cuts/segments/flat
    """
    rng = np.random.default_rng(seed)
    if kind == "any":
        kind = ("cuts", "segments", "flat")[int(rng.integers(0, 3))]

    width = int(rng.integers(48, 160))
    height = int(rng.integers(48, 160))
    fps = 3.0

    cuts: tuple[SceneCut, ...] = ()
    segments: tuple[tuple[float, float], ...] = ()
    if kind == "segments":
        frame_count = int(rng.integers(54, 96))
        duration = frame_count / fps
        # Dominant first segment keeps the inter-segment share of the pairwise
        # distances small enough that the auto-threshold stays below them;
        # boundaries sit exactly on the embedding frame-time grid.
        tail = int(rng.integers(5, max(6, frame_count // 10)))
        b2 = frame_count - max(2, tail // 2)
        b1 = frame_count - tail
        segments = ((0.0, b1 / fps), (b1 / fps, b2 / fps), (b2 / fps, duration))
    elif kind == "flat":
        frame_count = int(rng.integers(4, 30))
        duration = round_ms(frame_count / fps)
    else:
        frame_count = int(rng.integers(12, 91))
        duration = round_ms(frame_count / fps)
        if kind == "cuts":
            n_cuts = int(rng.integers(1, 4))
            times = sorted(
                round_ms(float(t))
                for t in rng.uniform(0.8, duration - 0.8, size=n_cuts)
            )
            dedup = []
            for t in times:
                if not dedup or t - dedup[-1] >= 0.5:
                    dedup.append(t)
            cuts = tuple(SceneCut(t) for t in dedup)

    n_objects = int(rng.integers(1, 5))
    picks = rng.choice(len(_CATALOG), size=n_objects, replace=False)
    boxes = _grid_boxes(rng, n_objects, width, height)
    mid = frame_count // 2

    objects = []
    for i, (pick, box) in enumerate(zip(picks, boxes)):
        referring, noun, generalized = _CATALOG[int(pick)]
        if kind == "frame0":
            end = int(rng.integers(mid, frame_count))
            present: tuple[tuple[int, int], ...] = ((0, end),)
        elif kind == "entryexit":
            start = int(rng.integers(0, mid + 1))
            end = int(rng.integers(mid, frame_count))
            present = ((start, end),)
            if end + 3 < frame_count - 1 and rng.random() < 0.5:
                re_start = int(rng.integers(end + 2, frame_count))
                present = ((start, end), (re_start, frame_count - 1))
        else:
            start = int(rng.integers(0, max(1, frame_count // 2)))
            end = int(rng.integers(start, frame_count))
            present = ((start, end),)
        action = _ACTIONS[int(rng.integers(0, len(_ACTIONS)))]
        objects.append(
            WorldObject(
                i,
                referring,
                noun,
                generalized,
                box,
                present,
                behaviors=(Behavior(0.0, duration, f"The {referring} is {action}."),),
            )
        )

    return StubWorld(
        record=VideoRecord(f"world-{kind}-{seed}", duration, fps, frame_count, width, height),
        objects=tuple(objects),
        cuts=cuts,
        segments_s=segments,
    )
