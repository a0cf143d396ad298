#!/usr/bin/env python3
"""Full per-video pseudo-annotation: entities, clips, masklets, transcript.

Every model call goes through the gateway; with stub backends the scripted
world doubles as ground truth, so the resulting metadata can be inspected
against what was scripted.
"""

from videoforge.annotator import annotate_video
from videoforge.backends.gateway import Gateway
from videoforge.backends.world import two_children_dog_world
from videoforge.metadata import validate_metadata

world = two_children_dog_world()
gw = Gateway.stub({world.record.video_id: world}, seed=7)

result = annotate_video(world.record, gw)
meta = result.metadata

print(f"video {meta.record.video_id}: {meta.record.duration_s}s @ {meta.record.fps} fps")
print("clips:", [(c.start_s, c.end_s) for c in meta.clips])
print("first appearance per entity:", meta.first_appearance)

print("\ntranscript grid (entity x clip):")
for t in meta.transcript:
    ref = meta.entity_by_id(t.entity_id).referring
    mark = "present" if t.present else "absent "
    detail = f" -> {t.behavior}" if t.present else ""
    print(f"  clip {t.clip_id} | {mark} | {ref}{detail}")

print("\nvalidation violations:", validate_metadata(meta) or "none")
print("provenance rows recorded:", len(result.provenance))
print("first provenance stages:", [e["stage"] for e in result.provenance[:4]])
