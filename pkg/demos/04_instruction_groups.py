#!/usr/bin/env python3
"""Synthesize the eight instruction-data groups from annotated metadata.

G1 holds clip-level behavior/presence templates (types 1-4), G2 the
first-appearance ordering MCQ (type 5), G5 timestamp-quoting templates
(type 6), G3/G4 LLM-generated QA (types 7-11), and G6/G7/G8 rewrite those
into <region>-referenced questions bound to a masklet frame.
"""

from collections import Counter

from videoforge.annotator import annotate_video
from videoforge.backends.gateway import Gateway
from videoforge.backends.world import two_children_dog_world
from videoforge.qa.assemble import GenerationConfig, assemble_groups

world = two_children_dog_world()
gw = Gateway.stub({world.record.video_id: world}, seed=7)
meta = annotate_video(world.record, gw).metadata

samples = assemble_groups(meta, gw, GenerationConfig(), seed=7)
print("samples per group:", dict(sorted(Counter(s.group for s in samples).items())))
print("samples per task type:", dict(sorted(Counter(s.task_type for s in samples).items())))

show = {
    "G1": "clip-level template",
    "G2": "temporal-order MCQ",
    "G5": "timestamp template",
    "G3": "LLM, exact time range",
    "G7": "mask-referring derivation",
}
for group, label in show.items():
    sample = next(s for s in samples if s.group == group)
    print(f"\n[{group}] {label} (task {sample.task_type}, {sample.format})")
    print(f"  Q: {sample.question}")
    print(f"  A: {sample.answer}")
    if sample.choices:
        for i, choice in enumerate(sample.choices):
            print(f"     ({chr(ord('A') + i)}) {choice}")
    if sample.region_refs:
        r = sample.region_refs[0]
        print(f"  region ref: entity {r.entity_id} on frame {r.frame_index}")

# Disabling the LLM-backed groups leaves the template-only recipe.
lean = GenerationConfig(groups=("G1", "G2", "G5", "G8"))
lean_samples = assemble_groups(meta, gw, lean, seed=7)
print("\ntemplate-only recipe groups:",
      dict(sorted(Counter(s.group for s in lean_samples).items())))
