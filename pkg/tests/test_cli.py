from __future__ import annotations

import json
from pathlib import Path

import pytest

from videoforge.backends.world import random_world, two_children_dog_world, world_to_doc
from videoforge.cli import main
from videoforge.util import canonical_json


@pytest.fixture()
def media_root(tmp_path):
    root = tmp_path / "media"
    worlds = root / "worlds"
    worlds.mkdir(parents=True)
    for world in (two_children_dog_world(), random_world(21, "cuts")):
        path = worlds / f"{world.record.video_id}.json"
        path.write_text(canonical_json(world_to_doc(world), indent=2))
    return root


def _tree_bytes(root: Path, patterns=("metadata", "masks", "dataset")) -> dict:
    out = {}
    for sub in patterns:
        base = root / sub
        if not base.exists():
            continue
        for p in sorted(base.rglob("*")):
            if p.is_file():
                out[str(p.relative_to(root))] = p.read_bytes()
    manifest = root / "manifest.json"
    if manifest.exists():
        out["manifest.json"] = manifest.read_bytes()
    return out


def test_annotate_then_generate_stub(media_root, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--media-root", str(media_root), "--out", str(out), "--seed", "7", "annotate"]) == 0
    assert (out / "metadata" / "fixture-children-dog.json").exists()
    assert (out / "provenance" / "fixture-children-dog.jsonl").exists()
    report = json.loads((out / "annotate_report.json").read_text())
    assert {r["video_id"] for r in report} == {"fixture-children-dog", "world-cuts-21"}

    assert main(["--media-root", str(media_root), "--out", str(out), "--seed", "7", "generate"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["total"] > 0
    assert set(manifest["groups"]) == {f"G{i}" for i in range(1, 9)}

    capsys.readouterr()
    assert main(["--out", str(out), "stats"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    printed = dict(line.split("\t") for line in lines)
    assert int(printed["total"]) == manifest["total"]
    for group, count in manifest["groups"].items():
        assert int(printed[group]) == count


def test_generate_without_annotate_exits_2(media_root, tmp_path, capsys):
    out = tmp_path / "fresh"
    code = main(["--media-root", str(media_root), "--out", str(out), "generate"])
    assert code == 2
    assert "metadata not found" in capsys.readouterr().err


def test_rerun_is_byte_identical(media_root, tmp_path):
    out = tmp_path / "out"
    for _ in range(2):
        assert main(["--media-root", str(media_root), "--out", str(out), "--seed", "3", "annotate"]) == 0
        assert main(["--media-root", str(media_root), "--out", str(out), "--seed", "3", "generate"]) == 0
        snapshot = _tree_bytes(out)
        if _ == 0:
            first = snapshot
    assert first == snapshot


def test_workers_do_not_change_bytes(media_root, tmp_path):
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    for out, workers in ((out1, "1"), (out2, "4")):
        assert main(
            ["--media-root", str(media_root), "--out", str(out), "--seed", "5",
             "--workers", workers, "annotate"]
        ) == 0
        assert main(
            ["--media-root", str(media_root), "--out", str(out), "--seed", "5",
             "--workers", workers, "generate"]
        ) == 0
    assert _tree_bytes(out1) == _tree_bytes(out2)


def test_clip_command(media_root, tmp_path):
    out = tmp_path / "out"
    assert main(["--media-root", str(media_root), "--out", str(out), "clip"]) == 0
    doc = json.loads((out / "clips" / "fixture-children-dog.json").read_text())
    assert [(c["start_s"], c["end_s"]) for c in doc] == [(0.0, 3.0), (3.0, 6.0), (6.0, 9.0)]


def test_masklets_command(media_root, tmp_path):
    out = tmp_path / "out"
    assert main(["--media-root", str(media_root), "--out", str(out), "masklets"]) == 0
    report = json.loads((out / "masklets_report.json").read_text())
    fixture_row = [r for r in report if r["video_id"] == "fixture-children-dog"][0]
    assert fixture_row["masklets"] == 3
    assert (out / "masks" / "fixture-children-dog" / "0.rle.json").exists()


def test_validate_command(media_root, tmp_path, capsys):
    out = tmp_path / "out"
    main(["--media-root", str(media_root), "--out", str(out), "--seed", "7", "annotate"])
    main(["--media-root", str(media_root), "--out", str(out), "--seed", "7", "generate"])
    assert main(["--out", str(out), "validate"]) == 0
    assert "all checks passed" in capsys.readouterr().out

    # corrupt one dataset line: validate must fail with exit 1
    path = out / "dataset" / "G1.jsonl"
    lines = path.read_text().splitlines()
    lines[0] = '{"nonsense": 1}'
    path.write_text("\n".join(lines) + "\n")
    assert main(["--out", str(out), "validate"]) == 1


def test_yesno_command(tmp_path, capsys):
    ann_path = tmp_path / "highlights.jsonl"
    rows = [
        {"video_id": "hv0", "duration_s": 60.0,
         "segments": [{"start_s": 20.0, "end_s": 40.0, "description": "A dog fetches a stick"}]},
        {"video_id": "hv1", "duration_s": 90.0,
         "segments": [{"start_s": 5.0, "end_s": 12.0, "description": "A chef plates a dish"}]},
    ]
    ann_path.write_text("\n".join(canonical_json(r) for r in rows) + "\n")
    out = tmp_path / "out"
    assert main(["--out", str(out), "--seed", "2", "yesno", "--annotations", str(ann_path)]) == 0
    manifest = json.loads((out / "yesno_manifest.json").read_text())
    assert abs(manifest["yes"] - manifest["no"]) <= 1
    lines = (out / "dataset" / "yesno.jsonl").read_text().splitlines()
    assert len(lines) == manifest["yes"] + manifest["no"]


def test_inspect_command(media_root, tmp_path, capsys):
    out = tmp_path / "out"
    main(["--media-root", str(media_root), "--out", str(out), "--seed", "7", "annotate"])
    capsys.readouterr()
    assert main(
        ["--out", str(out), "inspect", "--video", "fixture-children-dog",
         "--entity", "0", "--target-tokens", "3", "--grid", "4x4"]
    ) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["merge_groups"]) == 3
    assert report["pooled_shape"] == [27, 8]


def test_stub_mode_without_worlds_exits_2(tmp_path, capsys):
    code = main(["--media-root", str(tmp_path), "--out", str(tmp_path / "o"), "annotate"])
    assert code == 2
