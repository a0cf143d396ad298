"""Persistence: RLE mask codec, metadata documents, sample JSONL, manifests.

File layout under an output root:

    metadata/{video_id}.json
    masks/{video_id}/{entity_id}.rle.json
    dataset/{group}.jsonl
    manifest.json
    provenance/{video_id}.jsonl

All writers are byte-deterministic (stable ordering, seconds with exactly
three decimals) and atomic (temp file + rename).
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CodecError, InvalidInput
from .metadata import (
    ClipSegment,
    Entity,
    FrameMask,
    InstructionSample,
    Masklet,
    RegionRef,
    TimeRef,
    TranscriptEntry,
    VideoMetadata,
    VideoRecord,
    check_sample,
)
from .util import canonical_json, canonical_json_bytes, sha256_hex

GROUP_ORDER = ("G1", "G2", "G3", "G4", "G5", "G6", "G7", "G8")


# ---------------------------------------------------------------------------
# RLE codec (column-major uncompressed counts, leading run of zeros)
# ---------------------------------------------------------------------------

def rle_encode(mask: np.ndarray) -> list[int]:
    """Encode a binary grid as column-major run lengths starting with zeros.

    A grid whose first (column-major) cell is set gets a zero-length first
    run, so decoders can always assume runs alternate 0,1,0,1,...
    """
    flat = np.asarray(mask, dtype=np.uint8).ravel(order="F")
    if flat.size == 0:
        return [0]
    boundaries = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], boundaries, [flat.size]))
    counts = np.diff(starts).tolist()
    if flat[0] != 0:
        counts.insert(0, 0)
    return [int(c) for c in counts]


def rle_decode(counts: Sequence[int], dims: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`rle_encode`; dims is (height, width)."""
    height, width = dims
    total = height * width
    if any(c < 0 for c in counts):
        raise CodecError(f"negative run length in {counts!r}")
    if sum(counts) != total:
        raise CodecError(f"counts sum {sum(counts)} != {height}x{width}={total}")
    flat = np.zeros(total, dtype=np.uint8)
    pos = 0
    value = 0
    for c in counts:
        if value:
            flat[pos:pos + c] = 1
        pos += c
        value ^= 1
    return flat.reshape((height, width), order="F")


# ---------------------------------------------------------------------------
# Atomic file helpers
# ---------------------------------------------------------------------------

def atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def atomic_write_json(path: Path, obj, *, indent: int | None = 2) -> None:
    atomic_write_bytes(path, canonical_json_bytes(obj, indent=indent))


# ---------------------------------------------------------------------------
# Metadata documents
# ---------------------------------------------------------------------------

def metadata_to_doc(meta: VideoMetadata) -> dict:
    rec = meta.record
    return {
        "record": {
            "video_id": rec.video_id,
            "duration_s": float(rec.duration_s),
            "fps": float(rec.fps),
            "frame_count": rec.frame_count,
            "width_px": rec.width_px,
            "height_px": rec.height_px,
        },
        "clips": [
            {"clip_id": c.clip_id, "start_s": float(c.start_s), "end_s": float(c.end_s)}
            for c in meta.clips
        ],
        "entities": [
            {
                "entity_id": e.entity_id,
                "referring": e.referring,
                "noun": e.noun,
                "generalized_noun": e.generalized_noun,
            }
            for e in meta.entities
        ],
        "masklets": [
            {"entity_id": m.entity_id, "frames": list(m.frame_indices())}
            for m in meta.masklets
        ],
        "transcript": [
            {
                "entity_id": t.entity_id,
                "clip_id": t.clip_id,
                "present": t.present,
                "behavior": t.behavior if t.present else None,
            }
            for t in meta.transcript
        ],
        "first_appearance": {str(k): v for k, v in sorted(meta.first_appearance.items())},
    }


def masklet_to_doc(video_id: str, masklet: Masklet, dims: tuple[int, int]) -> dict:
    return {
        "video_id": video_id,
        "entity_id": masklet.entity_id,
        "size": [dims[0], dims[1]],
        "frames": [
            {"frame_index": fm.frame_index, "counts": rle_encode(fm.mask)}
            for fm in masklet.frames
        ],
    }


def masklet_from_doc(doc: dict) -> Masklet:
    h, w = doc["size"]
    frames = tuple(
        FrameMask(f["frame_index"], rle_decode(f["counts"], (h, w)))
        for f in doc["frames"]
    )
    return Masklet(entity_id=doc["entity_id"], frames=frames)


def save_metadata(meta: VideoMetadata, root: Path) -> Path:
    root = Path(root)
    doc_path = root / "metadata" / f"{meta.record.video_id}.json"
    atomic_write_json(doc_path, metadata_to_doc(meta))
    dims = (meta.record.height_px, meta.record.width_px)
    for m in meta.masklets:
        mask_path = root / "masks" / meta.record.video_id / f"{m.entity_id}.rle.json"
        atomic_write_json(mask_path, masklet_to_doc(meta.record.video_id, m, dims))
    return doc_path


def load_metadata(root: Path, video_id: str) -> VideoMetadata:
    root = Path(root)
    doc = json.loads((root / "metadata" / f"{video_id}.json").read_text("utf-8"))
    rec = VideoRecord(**doc["record"])
    masklets = []
    for m in doc["masklets"]:
        mask_path = root / "masks" / video_id / f"{m['entity_id']}.rle.json"
        masklets.append(masklet_from_doc(json.loads(mask_path.read_text("utf-8"))))
    return VideoMetadata(
        record=rec,
        clips=tuple(ClipSegment(**c) for c in doc["clips"]),
        entities=tuple(Entity(**e) for e in doc["entities"]),
        masklets=tuple(masklets),
        transcript=tuple(
            TranscriptEntry(t["entity_id"], t["clip_id"], t["present"], t["behavior"])
            for t in doc["transcript"]
        ),
        first_appearance={int(k): v for k, v in doc["first_appearance"].items()},
    )


# ---------------------------------------------------------------------------
# Instruction samples
# ---------------------------------------------------------------------------

def sample_to_obj(s: InstructionSample) -> dict:
    return {
        "sample_id": s.sample_id,
        "video_id": s.video_id,
        "task_type": s.task_type,
        "group": s.group,
        "visual_input": "full_video" if s.clip_id is None else f"clip:{s.clip_id}",
        "format": s.format,
        "question": s.question,
        "answer": s.answer,
        "choices": list(s.choices),
        "correct_index": s.correct_index,
        "region_refs": [
            {"entity_id": r.entity_id, "frame_index": r.frame_index} for r in s.region_refs
        ],
        "time_refs": [_time_ref_to_obj(t) for t in s.time_refs],
        "entity_ids": list(s.entity_ids),
        "seed": s.seed,
    }


def _time_ref_to_obj(t: TimeRef) -> dict:
    if t.kind == "exact_range":
        return {"kind": "exact_range", "start_s": float(t.start_s), "end_s": float(t.end_s)}
    return {"kind": "coarse_phase", "phase": t.phase}


def _time_ref_from_obj(o: dict) -> TimeRef:
    if o["kind"] == "exact_range":
        return TimeRef.exact(o["start_s"], o["end_s"])
    return TimeRef.coarse(o["phase"])


def sample_from_obj(o: dict) -> InstructionSample:
    visual = o["visual_input"]
    clip_id = None if visual == "full_video" else int(visual.split(":", 1)[1])
    return InstructionSample(
        sample_id=o["sample_id"],
        video_id=o["video_id"],
        task_type=o["task_type"],
        group=o["group"],
        clip_id=clip_id,
        format=o["format"],
        question=o["question"],
        answer=o["answer"],
        choices=tuple(o["choices"]),
        correct_index=o["correct_index"],
        region_refs=tuple(RegionRef(r["entity_id"], r["frame_index"]) for r in o["region_refs"]),
        time_refs=tuple(_time_ref_from_obj(t) for t in o["time_refs"]),
        entity_ids=tuple(o.get("entity_ids", ())),
        seed=o["seed"],
    )


def write_dataset(
    samples: Iterable[InstructionSample],
    root: Path,
    *,
    seed: int,
    config_obj=None,
) -> dict:
    """Write samples to dataset/{group}.jsonl; returns the written manifest."""
    root = Path(root)
    by_group: dict[str, list[InstructionSample]] = {g: [] for g in GROUP_ORDER}
    for s in samples:
        problems = check_sample(s)
        if problems:
            raise InvalidInput(f"sample {s.sample_id}: {problems}")
        by_group[s.group].append(s)

    digests = []
    counts = {}
    for group in GROUP_ORDER:
        rows = sorted(by_group[group], key=lambda s: (s.video_id, s.sample_id))
        lines = [canonical_json(sample_to_obj(s)) for s in rows]
        data = ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
        atomic_write_bytes(root / "dataset" / f"{group}.jsonl", data)
        digests.append(data)
        counts[group] = len(rows)

    manifest = {
        "groups": counts,
        "total": sum(counts.values()),
        "seed": seed,
        "config_hash": sha256_hex(canonical_json(config_obj)) if config_obj is not None else None,
        "digest": sha256_hex(b"".join(digests)),
    }
    atomic_write_json(root / "manifest.json", manifest)
    return manifest


def read_dataset(root: Path) -> dict[str, list[InstructionSample]]:
    """Exact inverse of :func:`write_dataset`; schema errors carry line numbers."""
    root = Path(root)
    out: dict[str, list[InstructionSample]] = {}
    for group in GROUP_ORDER:
        path = root / "dataset" / f"{group}.jsonl"
        rows: list[InstructionSample] = []
        if path.exists():
            for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    sample = sample_from_obj(json.loads(line))
                except (KeyError, ValueError, TypeError) as exc:
                    raise InvalidInput(f"{path.name}:{lineno}: bad sample ({exc})") from exc
                problems = check_sample(sample)
                if problems:
                    raise InvalidInput(f"{path.name}:{lineno}: {problems}")
                rows.append(sample)
        out[group] = rows
    return out


# ---------------------------------------------------------------------------
# Yes/No samples and provenance
# ---------------------------------------------------------------------------

def write_yesno(samples, root: Path, *, seed: int) -> dict:
    """Write timestamp yes/no QA rows plus a small manifest of their own."""
    root = Path(root)
    rows = sorted(samples, key=lambda s: (s.video_id, s.sample_id))
    lines = [
        canonical_json(
            {
                "sample_id": s.sample_id,
                "video_id": s.video_id,
                "question": s.question,
                "answer": s.answer,
                "start_s": float(s.start_s),
                "end_s": float(s.end_s),
                "seed": s.seed,
            }
        )
        for s in rows
    ]
    data = ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
    atomic_write_bytes(root / "dataset" / "yesno.jsonl", data)
    manifest = {
        "yes": sum(1 for s in rows if s.answer == "Yes"),
        "no": sum(1 for s in rows if s.answer == "No"),
        "seed": seed,
        "digest": sha256_hex(data),
    }
    atomic_write_json(root / "yesno_manifest.json", manifest)
    return manifest


def write_provenance(entries: Iterable[dict], root: Path, video_id: str) -> Path:
    path = Path(root) / "provenance" / f"{video_id}.jsonl"
    lines = [canonical_json(e) for e in entries]
    data = ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
    atomic_write_bytes(path, data)
    return path


def load_highlight_annotations(path: Path) -> list[dict]:
    """Read highlight annotation JSONL: {video_id, duration_s, segments}."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            _ = obj["video_id"], obj["duration_s"], obj["segments"]
            for seg in obj["segments"]:
                _ = seg["start_s"], seg["end_s"], seg["description"]
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidInput(f"{Path(path).name}:{lineno}: bad annotation ({exc})") from exc
        rows.append(obj)
    return rows
