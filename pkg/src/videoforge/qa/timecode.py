"""Timestamp formatting and temporal anchor-token conversion.

A video of duration L is divided into M equal segments, giving M+1 anchor
points <0>..<M>. A continuous timestamp tau maps to the nearest anchor:

    t = round(M * tau / L)        tau = L * t / M

with half-up rounding, so the roundtrip error is bounded by L / (2M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidInput


def format_timestamp(seconds: float) -> str:
    """Render seconds as zero-padded HH:MM:SS.xxx, milliseconds truncated."""
    if seconds < 0:
        raise InvalidInput(f"negative timestamp {seconds}")
    total_ms = int(math.floor(seconds * 1000 + 1e-6))
    ms = total_ms % 1000
    total_s = total_ms // 1000
    hours, rem = divmod(total_s, 3600)
    minutes, secs = divmod(rem, 60)
    return f"{hours:02d}:{minutes:02d}:{secs:02d}.{ms:03d}"


@dataclass(frozen=True)
class TemporalTokenizer:
    anchor_count: int  # M anchors beyond <0>; the vocabulary holds M+1 tokens
    duration_s: float

    def __post_init__(self):
        if self.anchor_count < 1:
            raise InvalidInput("anchor_count must be >= 1")
        if self.duration_s <= 0:
            raise InvalidInput("duration_s must be positive")

    def to_token(self, tau: float) -> int:
        if not (0 <= tau <= self.duration_s + 1e-9):
            raise InvalidInput(f"timestamp {tau} outside [0, {self.duration_s}]")
        return int(math.floor(self.anchor_count * tau / self.duration_s + 0.5))

    def from_token(self, t: int) -> float:
        if not (0 <= t <= self.anchor_count):
            raise InvalidInput(f"token {t} outside [0, {self.anchor_count}]")
        return self.duration_s * t / self.anchor_count

    def token_text(self, tau: float) -> str:
        return f"<{self.to_token(tau)}>"
