#!/usr/bin/env python3
"""Referring masklet generation on the two-children-plus-dog fixture.

Frames are scanned middle-first for the first frame whose detection count
reaches the number of referring expressions; tracking then runs forward and
backward from that frame, the halves are merged per object, and referring
expressions are assigned one-to-one within each noun group.
"""

from videoforge.backends.gateway import Gateway
from videoforge.backends.world import two_children_dog_world
from videoforge.masklets import generate_referring_masklets, sample_and_reorder_frames

world = two_children_dog_world()
gw = Gateway.stub({world.record.video_id: world}, seed=7)
entities = world.entities()

print("entities from the referring parser:")
for e in entities:
    print(f"  {e.entity_id}: '{e.referring}' (noun={e.noun}, generalized={e.generalized_noun})")

order = sample_and_reorder_frames(world.record.frame_count).order
print(f"\nmiddle-first scan order (first 8 of {len(order)}): {order[:8]}")

result = generate_referring_masklets(world.record, entities, gw)
print(f"initial tracking frame f* = {result.initial_frame}")
print("merged masklets:")
for m in result.masklets:
    frames = m.frame_indices()
    scripted = world.object_for_entity(m.entity_id).present
    print(f"  entity {m.entity_id}: frames {frames[0]}..{frames[-1]} "
          f"({len(frames)} masks, scripted presence {scripted})")
print("unassigned entities:", list(result.unassigned) or "none")
