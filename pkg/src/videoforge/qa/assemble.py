"""Group assembly: runs the generators and partitions samples into G1-G8."""

from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import InvalidInput
from ..metadata import GROUP_TASKS, InstructionSample, VideoMetadata
from ..util import derive_seed
from .llmgen import derive_mask_referring, gen_llm_qa
from .templates import gen_template_clip_qa, gen_temporal_order_mcq, gen_timestamp_template_qa

ALL_GROUPS = tuple(GROUP_TASKS)


@dataclass(frozen=True)
class GenerationConfig:
    groups: tuple[str, ...] = ALL_GROUPS
    quotas: dict[str, Optional[int]] = field(default_factory=dict)
    g8_fraction: float = 1.0 / 6.0
    anchor_count: int = 31  # temporal-token anchors (M); 32 tokens learned

    def __post_init__(self):
        unknown = set(self.groups) - set(ALL_GROUPS)
        if unknown:
            raise InvalidInput(f"unknown groups in config: {sorted(unknown)}")
        if not (0 < self.g8_fraction <= 1):
            raise InvalidInput("g8_fraction must be in (0, 1]")

    def enabled(self, group: str) -> bool:
        return group in self.groups

    def to_obj(self) -> dict:
        return {
            "groups": list(self.groups),
            "quotas": {k: self.quotas[k] for k in sorted(self.quotas)},
            "g8_fraction": self.g8_fraction,
            "anchor_count": self.anchor_count,
        }

    @staticmethod
    def from_file(path: Path) -> "GenerationConfig":
        obj = json.loads(Path(path).read_text("utf-8"))
        return GenerationConfig(
            groups=tuple(obj.get("groups", ALL_GROUPS)),
            quotas=dict(obj.get("quotas", {})),
            g8_fraction=obj.get("g8_fraction", 1.0 / 6.0),
            anchor_count=obj.get("anchor_count", 31),
        )


def _apply_quota(samples: list, quota: Optional[int], seed: int, group: str) -> list:
    if quota is None or len(samples) <= quota:
        return samples
    rng = random.Random(derive_seed(seed, group, "quota"))
    keep = sorted(rng.sample(range(len(samples)), quota))
    return [samples[i] for i in keep]


def assemble_groups(
    meta: VideoMetadata,
    gateway,
    config: GenerationConfig,
    seed: int,
) -> list[InstructionSample]:
    """All enabled groups for one video, with deterministic sample ids."""
    by_group: dict[str, list[InstructionSample]] = {g: [] for g in ALL_GROUPS}

    if config.enabled("G1"):
        for clip in meta.clips:
            by_group["G1"].extend(gen_template_clip_qa(meta, clip, seed))
    if config.enabled("G2"):
        by_group["G2"].extend(gen_temporal_order_mcq(meta, seed))
    if config.enabled("G5") or config.enabled("G8"):
        g5 = gen_timestamp_template_qa(meta, seed)
        if config.enabled("G5"):
            by_group["G5"] = g5
    else:
        g5 = []

    llm_types: set[int] = set()
    if config.enabled("G3") or config.enabled("G6"):
        llm_types.add(7)
    if config.enabled("G4") or config.enabled("G7"):
        llm_types.update((8, 9, 10, 11))
    if llm_types:
        llm_samples = gen_llm_qa(meta, gateway, sorted(llm_types), seed)
        g3 = [s for s in llm_samples if s.group == "G3"]
        g4 = [s for s in llm_samples if s.group == "G4"]
        if config.enabled("G3"):
            by_group["G3"] = g3
        if config.enabled("G4"):
            by_group["G4"] = g4
        if config.enabled("G6"):
            by_group["G6"] = derive_mask_referring(g3, meta, gateway, seed)
        if config.enabled("G7"):
            by_group["G7"] = derive_mask_referring(g4, meta, gateway, seed)

    if config.enabled("G8") and g5:
        count = min(len(g5), max(1, round(len(g5) * config.g8_fraction)))
        rng = random.Random(derive_seed(seed, meta.record.video_id, "g8-subset"))
        picks = sorted(rng.sample(range(len(g5)), count))
        by_group["G8"] = derive_mask_referring([g5[i] for i in picks], meta, gateway, seed)

    out: list[InstructionSample] = []
    for group in ALL_GROUPS:
        rows = _apply_quota(by_group[group], config.quotas.get(group), seed, group)
        for i, sample in enumerate(rows):
            out.append(
                dataclasses.replace(
                    sample, sample_id=f"{meta.record.video_id}:{group}:{i:05d}"
                )
            )
    return out
