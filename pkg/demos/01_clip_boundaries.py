#!/usr/bin/env python3
"""Walk through the video clipper: scene cuts first, clustering fallback.

The clipper asks the scene detector first. When that returns nothing and the
video is at least 3 seconds long, it embeds frames at 3 FPS, derives the
automatic threshold min(mean + 1.7*std, max) over all pairwise cosine
distances, and cuts wherever average-linkage clustering changes label.
"""

import numpy as np

from videoforge.backends.gateway import Gateway
from videoforge.backends.world import random_world
from videoforge.clipper import (
    agglomerative_cluster,
    clip_video,
    clustering_auto_threshold,
    pairwise_distances,
    summarize_distances,
)

# A world with a hard cut scripted at the detector level.
cut_world = random_world(5, "cuts")
gw = Gateway.stub({cut_world.record.video_id: cut_world}, seed=5)
clips = clip_video(cut_world.record, gw)
print(f"scene-cut path on {cut_world.record.video_id}:")
for c in clips:
    print(f"  clip {c.clip_id}: [{c.start_s:.3f}, {c.end_s:.3f})")

# A world the scene detector cannot split: three semantic segments, the
# first dominant. Watch the threshold land below the inter-segment distance.
seg_world = random_world(12, "segments")
gw = Gateway.stub({seg_world.record.video_id: seg_world}, seed=12)
record = seg_world.record
count = int(record.duration_s * 3)
times = [k / 3 for k in range(count)]
emb = gw.embed_frames(record.video_id, [record.frame_at(t) for t in times], 3.0)

distances = pairwise_distances(emb)
summary = summarize_distances(distances)
threshold = clustering_auto_threshold(distances, 1.7)
print(f"\nclustering path on {record.video_id} ({count} embeddings):")
print(f"  distance mean={summary.mean:.4f} std={summary.std:.4f} max={summary.max:.4f}")
print(f"  auto threshold = min(mean + 1.7*std, max) = {threshold:.4f}")

labels = agglomerative_cluster(emb, threshold)
changes = [i for i in range(1, count) if labels[i] != labels[i - 1]]
print(f"  label changes at embedding frames {changes}")

clips = clip_video(record, gw)
print("  clips:", [(c.start_s, c.end_s) for c in clips])
print("  scripted segments:", [(round(a, 3), round(b, 3)) for a, b in seg_world.segments_s])

# Short videos skip clustering entirely.
flat = random_world(2, "flat")
gw = Gateway.stub({flat.record.video_id: flat}, seed=2)
print(f"\n{flat.record.duration_s:.1f}s video with no cuts ->",
      [(c.start_s, c.end_s) for c in clip_video(flat.record, gw)])
