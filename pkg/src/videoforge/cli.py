"""Batch command-line entry points for the annotation and generation pipeline.

Inputs come from --media-root (scripted worlds for stub mode, a videos.jsonl
index for remote/replay); every artifact lands under --out. Exit codes:
0 success, 1 pipeline failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dataset_io
from .annotator import AnnotatorConfig, annotate_video
from .backends.gateway import Gateway
from .backends.world import load_world_dir
from .clipper import clip_video
from .errors import PipelineError
from .masklets import generate_referring_masklets
from .metadata import VideoRecord, validate_metadata
from .qa.assemble import GenerationConfig, assemble_groups
from .qa.timecode import TemporalTokenizer
from .qa.yesno import build_timestamp_yesno_qa
from .region_tokens import FeatureMap, mask_pool, merge_groups, resize_masklet_to_grid
from .util import canonical_json, derive_seed

logger = logging.getLogger("videoforge")

CONFIG_ENV_VAR = "VIDEOFORGE_CONFIG"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="videoforge")
    parser.add_argument("--config", help=f"generation config JSON (fallback: ${CONFIG_ENV_VAR})")
    parser.add_argument("--backend-mode", choices=("stub", "replay", "remote"), default="stub")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--media-root", default=".")
    parser.add_argument("--out", default="out")
    parser.add_argument("--endpoint", help="service URL for remote mode")
    parser.add_argument("--fixtures", help="fixture dir for replay mode")
    parser.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("annotate", help="videos -> metadata + masklets + transcripts")
    sub.add_parser("clip", help="run the clipper only")
    sub.add_parser("masklets", help="run referring masklet generation only")
    sub.add_parser("generate", help="metadata -> instruction dataset groups")

    yesno = sub.add_parser("yesno", help="highlight annotations -> yes/no QA")
    yesno.add_argument("--annotations", required=True, help="JSONL of highlight annotations")
    yesno.add_argument("--temporal-tokens", action="store_true", help="render times as anchor tokens")

    inspect = sub.add_parser("inspect", help="region-token math on a stored masklet")
    inspect.add_argument("--video", required=True)
    inspect.add_argument("--entity", type=int, required=True)
    inspect.add_argument("--target-tokens", type=int, default=4)
    inspect.add_argument("--grid", default="8x8", help="feature grid as HxW")

    sub.add_parser("validate", help="schema-check metadata and dataset files")
    sub.add_parser("stats", help="print manifest summaries")
    return parser


def _load_config(args) -> GenerationConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return GenerationConfig()
    if not Path(path).exists():
        raise SystemExit(2)
    return GenerationConfig.from_file(Path(path))


def _gateway(args, worlds) -> Gateway:
    if args.backend_mode == "stub":
        return Gateway.stub(worlds, seed=args.seed)
    if args.backend_mode == "replay":
        if not args.fixtures:
            print("replay mode requires --fixtures", file=sys.stderr)
            raise SystemExit(2)
        return Gateway.replay(Path(args.fixtures), seed=args.seed)
    if not args.endpoint:
        print("remote mode requires --endpoint", file=sys.stderr)
        raise SystemExit(2)
    return Gateway.remote(args.endpoint, seed=args.seed)


def _records(args, worlds) -> list[VideoRecord]:
    if worlds:
        return [w.record for w in worlds.values()]
    index = Path(args.media_root) / "videos.jsonl"
    if not index.exists():
        print(f"no videos found under {args.media_root}", file=sys.stderr)
        raise SystemExit(2)
    records = []
    for line in index.read_text("utf-8").splitlines():
        if line.strip():
            records.append(VideoRecord(**json.loads(line)))
    return records


def _load_worlds(args) -> dict:
    worlds_dir = Path(args.media_root) / "worlds"
    if worlds_dir.is_dir():
        return load_world_dir(worlds_dir)
    if args.backend_mode == "stub":
        print(f"stub mode requires scripted worlds under {worlds_dir}", file=sys.stderr)
        raise SystemExit(2)
    return {}


def _run_per_video(records, fn, workers: int):
    """Run fn per record; failures abort with exit 1 but keep other videos."""
    records = sorted(records, key=lambda r: r.video_id)
    failures = []
    if workers <= 1:
        results = []
        for rec in records:
            try:
                results.append((rec.video_id, fn(rec)))
            except PipelineError as exc:
                failures.append((rec.video_id, str(exc)))
    else:
        results = []
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {rec.video_id: pool.submit(fn, rec) for rec in records}
        for vid in sorted(futures):
            try:
                results.append((vid, futures[vid].result()))
            except PipelineError as exc:
                failures.append((vid, str(exc)))
    for vid, message in failures:
        print(f"FAILED {vid}: {message}", file=sys.stderr)
    if failures:
        raise SystemExit(1)
    return results


def cmd_annotate(args) -> int:
    worlds = _load_worlds(args)
    gateway = _gateway(args, worlds)
    out = Path(args.out)
    config = AnnotatorConfig()

    def run(record: VideoRecord):
        result = annotate_video(record, gateway, config)
        dataset_io.save_metadata(result.metadata, out)
        dataset_io.write_provenance(result.provenance, out, record.video_id)
        return {
            "video_id": record.video_id,
            "entities": len(result.metadata.entities),
            "clips": len(result.metadata.clips),
            "masklets": len(result.metadata.masklets),
            "unassigned": list(result.unassigned),
            "warnings": list(result.warnings),
        }

    results = _run_per_video(_records(args, worlds), run, args.workers)
    report = [row for _, row in results]
    dataset_io.atomic_write_json(out / "annotate_report.json", report)
    print(f"annotated {len(report)} video(s) -> {out}")
    return 0


def cmd_clip(args) -> int:
    worlds = _load_worlds(args)
    gateway = _gateway(args, worlds)
    out = Path(args.out)

    def run(record: VideoRecord):
        clips = clip_video(record, gateway)
        doc = [
            {"clip_id": c.clip_id, "start_s": float(c.start_s), "end_s": float(c.end_s)}
            for c in clips
        ]
        dataset_io.atomic_write_json(out / "clips" / f"{record.video_id}.json", doc)
        return len(clips)

    results = _run_per_video(_records(args, worlds), run, args.workers)
    print(f"clipped {len(results)} video(s) -> {out / 'clips'}")
    return 0


def cmd_masklets(args) -> int:
    worlds = _load_worlds(args)
    gateway = _gateway(args, worlds)
    out = Path(args.out)
    from .annotator import parse_referrings, recognize_entities

    def run(record: VideoRecord):
        paragraph = recognize_entities(record, gateway)
        entities = parse_referrings(paragraph, gateway)
        result = generate_referring_masklets(record, entities, gateway)
        dims = (record.height_px, record.width_px)
        for masklet in result.masklets:
            path = out / "masks" / record.video_id / f"{masklet.entity_id}.rle.json"
            dataset_io.atomic_write_json(
                path, dataset_io.masklet_to_doc(record.video_id, masklet, dims)
            )
        return {
            "video_id": record.video_id,
            "masklets": len(result.masklets),
            "unassigned": list(result.unassigned),
            "initial_frame": result.initial_frame,
        }

    results = _run_per_video(_records(args, worlds), run, args.workers)
    dataset_io.atomic_write_json(out / "masklets_report.json", [row for _, row in results])
    print(f"generated masklets for {len(results)} video(s) -> {out / 'masks'}")
    return 0


def cmd_generate(args) -> int:
    out = Path(args.out)
    metadata_dir = out / "metadata"
    docs = sorted(metadata_dir.glob("*.json")) if metadata_dir.is_dir() else []
    if not docs:
        print(f"metadata not found under {metadata_dir}; run annotate first", file=sys.stderr)
        return 2
    worlds = _load_worlds(args)
    gateway = _gateway(args, worlds)
    config = _load_config(args)

    samples = []
    for doc in docs:
        meta = dataset_io.load_metadata(out, doc.stem)
        samples.extend(assemble_groups(meta, gateway, config, args.seed))
    manifest = dataset_io.write_dataset(samples, out, seed=args.seed, config_obj=config.to_obj())
    print(canonical_json(manifest, indent=2))
    return 0


def cmd_yesno(args) -> int:
    config = _load_config(args)
    annotations = dataset_io.load_highlight_annotations(Path(args.annotations))
    out = Path(args.out)
    if args.temporal_tokens:
        samples = []
        for ann in annotations:
            tokenizer = TemporalTokenizer(config.anchor_count, ann["duration_s"])
            samples.extend(build_timestamp_yesno_qa([ann], args.seed, tokenizer))
    else:
        samples = build_timestamp_yesno_qa(annotations, args.seed)
    manifest = dataset_io.write_yesno(samples, out, seed=args.seed)
    print(canonical_json(manifest, indent=2))
    return 0


def cmd_inspect(args) -> int:
    out = Path(args.out)
    mask_path = out / "masks" / args.video / f"{args.entity}.rle.json"
    if not mask_path.exists():
        print(f"no masklet at {mask_path}", file=sys.stderr)
        return 2
    masklet = dataset_io.masklet_from_doc(json.loads(mask_path.read_text("utf-8")))
    try:
        gh, gw = (int(x) for x in args.grid.split("x"))
    except ValueError:
        print(f"bad --grid {args.grid!r}; expected HxW", file=sys.stderr)
        return 2

    stack = np.stack([fm.mask for fm in masklet.frames])
    resized = resize_masklet_to_grid(stack, (gh, gw))
    rng = np.random.default_rng(derive_seed(args.seed, args.video, args.entity, "inspect"))
    features = FeatureMap(rng.standard_normal((len(masklet.frames), 8, gh, gw)))
    pooled = mask_pool(features, resized)
    if not 1 <= args.target_tokens <= pooled.tokens.shape[0]:
        print(
            f"--target-tokens must be in [1, {pooled.tokens.shape[0]}] for this masklet",
            file=sys.stderr,
        )
        return 2
    groups = merge_groups(pooled.tokens, args.target_tokens)
    report = {
        "video_id": args.video,
        "entity_id": args.entity,
        "masked_frames": [fm.frame_index for fm in masklet.frames],
        "resized_cells_per_frame": [int(m.sum()) for m in resized],
        "pooled_shape": list(pooled.tokens.shape),
        "merge_groups": groups,
    }
    print(canonical_json(report, indent=2))
    return 0


def cmd_validate(args) -> int:
    out = Path(args.out)
    problems: list[str] = []
    metadata_dir = out / "metadata"
    for doc in sorted(metadata_dir.glob("*.json")) if metadata_dir.is_dir() else []:
        meta = dataset_io.load_metadata(out, doc.stem)
        for violation in validate_metadata(meta):
            problems.append(f"{doc.stem}: {violation}")
    if (out / "dataset").is_dir():
        try:
            dataset_io.read_dataset(out)
        except PipelineError as exc:
            problems.append(str(exc))
    for p in problems:
        print(p)
    if problems:
        return 1
    print("all checks passed")
    return 0


def cmd_stats(args) -> int:
    manifest_path = Path(args.out) / "manifest.json"
    if not manifest_path.exists():
        print(f"no manifest at {manifest_path}", file=sys.stderr)
        return 2
    manifest = json.loads(manifest_path.read_text("utf-8"))
    for group, count in manifest["groups"].items():
        print(f"{group}\t{count}")
    print(f"total\t{manifest['total']}")
    return 0


_COMMANDS = {
    "annotate": cmd_annotate,
    "clip": cmd_clip,
    "masklets": cmd_masklets,
    "generate": cmd_generate,
    "yesno": cmd_yesno,
    "inspect": cmd_inspect,
    "validate": cmd_validate,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except PipelineError as exc:
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
