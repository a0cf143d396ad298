#!/usr/bin/env python3
"""Region-token math and temporal encodings.

Mask pooling averages feature vectors inside the (grid-resized) mask per
frame; temporal token merge condenses those per-frame tokens into a fixed
number of contiguous groups. Timestamps render as HH:MM:SS.xxx or as anchor
tokens <t> with t = round(M * tau / L).
"""

import numpy as np

from videoforge.qa.timecode import TemporalTokenizer, format_timestamp
from videoforge.qa.yesno import build_timestamp_yesno_qa
from videoforge.region_tokens import FeatureMap, mask_pool, merge_groups, resize_masklet_to_grid

rng = np.random.default_rng(0)

# Eight masked frames on a 4x4 feature grid, two cells set per frame.
t_m, d_v = 8, 6
features = FeatureMap(rng.standard_normal((t_m, d_v, 4, 4)))
pixel_masks = np.zeros((t_m, 16, 16), dtype=np.uint8)
pixel_masks[:, 4:9, 6:12] = 1
grid_masks = resize_masklet_to_grid(pixel_masks, (4, 4))
print("resized mask cells per frame:", [int(m.sum()) for m in grid_masks])

pooled = mask_pool(features, grid_masks)
print("pooled tokens shape:", pooled.tokens.shape)

for target in (8, 4, 1):
    groups = merge_groups(pooled.tokens, target)
    print(f"merge to {target} tokens -> groups {groups}")

# Timestamp rendering, both conventions from the same 90 s video.
tau = 19.228
print(f"\ntau={tau}s formatted: {format_timestamp(tau)}")
for anchors in (31, 32):
    tok = TemporalTokenizer(anchors, 90.0)
    print(f"  {anchors} anchors -> token {tok.token_text(tau)}")

# Yes/no QA from one highlight annotation.
ann = {
    "video_id": "demo",
    "duration_s": 60.0,
    "segments": [{"start_s": 20.0, "end_s": 40.0, "description": "A dog fetches a stick"}],
}
for s in build_timestamp_yesno_qa([ann], seed=3):
    print(f"\n[{s.answer}] {s.question}")
