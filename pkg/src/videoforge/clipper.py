"""Video clipping: scene-detector first pass, then embedding clustering.

The fallback path embeds frames at a fixed rate, computes all pairwise
cosine distances, derives an automatic threshold min(mean + f*std, max) with
population std, and runs average-linkage agglomerative clustering; clip
boundaries fall wherever the cluster label changes between adjacent frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput
from .metadata import ClipSegment, VideoRecord
from .util import round_ms

DEFAULT_SCENE_THRESHOLD = 20.0
DEFAULT_CLUSTER_FACTOR = 1.7
DEFAULT_EMBED_RATE = 3.0
MIN_CLUSTER_DURATION_S = 3.0


@dataclass(frozen=True)
class DistanceSummary:
    mean: float
    std: float
    max: float


def pairwise_distances(embeddings: np.ndarray) -> np.ndarray:
    """All n(n-1)/2 unordered-pair cosine distances (1 - dot of unit vectors)."""
    E = np.asarray(embeddings, dtype=np.float64)
    n = E.shape[0]
    if n < 2:
        raise InvalidInput("pairwise_distances needs at least 2 embeddings")
    sims = E @ E.T
    iu = np.triu_indices(n, k=1)
    return np.clip(1.0 - sims[iu], 0.0, 2.0)


def summarize_distances(distances: Sequence[float]) -> DistanceSummary:
    d = np.asarray(distances, dtype=np.float64)
    if d.size == 0:
        raise InvalidInput("empty distance multiset")
    return DistanceSummary(mean=float(d.mean()), std=float(d.std()), max=float(d.max()))


def clustering_auto_threshold(distances: Sequence[float], factor: float) -> float:
    """min(mean + factor * population_std, max) over the distance multiset."""
    if factor <= 0:
        raise InvalidInput("factor must be positive")
    s = summarize_distances(distances)
    return min(s.mean + factor * s.std, s.max)


def agglomerative_cluster(embeddings: np.ndarray, threshold: float) -> list[int]:
    """Average-linkage agglomeration over cosine distance.

    Merging continues while the minimum inter-cluster linkage is <= threshold.
    Ties between equally close pairs break on the smallest (min label,
    max label), labels being each cluster's smallest member index. Cross-pair
    distances are summed in sorted order so the result is independent of the
    input ordering. Output labels are numbered in first-occurrence order.
    """
    E = np.asarray(embeddings, dtype=np.float64)
    n = E.shape[0]
    if n == 0:
        raise InvalidInput("agglomerative_cluster needs at least 1 embedding")
    if threshold < 0:
        raise InvalidInput("threshold must be >= 0")
    if n == 1:
        return [0]

    D = np.clip(1.0 - E @ E.T, 0.0, 2.0)
    np.fill_diagonal(D, 0.0)

    members: dict[int, list[int]] = {i: [i] for i in range(n)}

    def linkage(a: int, b: int) -> float:
        vals = np.sort(D[np.ix_(members[a], members[b])], axis=None)
        return float(vals.sum() / vals.size)

    links: dict[tuple[int, int], float] = {}
    active = sorted(members)
    for i, a in enumerate(active):
        for b in active[i + 1:]:
            links[(a, b)] = linkage(a, b)

    while len(members) > 1:
        best_key = None
        best_pair = None
        for (a, b), link in links.items():
            key = (link, min(members[a][0], members[b][0]), max(members[a][0], members[b][0]))
            if best_key is None or key < best_key:
                best_key, best_pair = key, (a, b)
        if best_key[0] > threshold:
            break
        a, b = best_pair
        keep, drop = (a, b) if members[a][0] < members[b][0] else (b, a)
        members[keep] = sorted(members[keep] + members[drop])
        del members[drop]
        links = {pair: v for pair, v in links.items() if drop not in pair}
        for other in members:
            if other == keep:
                continue
            pair = (min(keep, other), max(keep, other))
            links[pair] = linkage(keep, other)

    cluster_of = {}
    for cid, idxs in members.items():
        for i in idxs:
            cluster_of[i] = cid
    labels: list[int] = []
    relabel: dict[int, int] = {}
    for i in range(n):
        cid = cluster_of[i]
        if cid not in relabel:
            relabel[cid] = len(relabel)
        labels.append(relabel[cid])
    return labels


def extract_clip_boundaries(
    labels: Sequence[int], frame_times: Sequence[float], duration_s: float
) -> list[ClipSegment]:
    """Cut wherever the label changes between temporally adjacent frames."""
    if len(labels) != len(frame_times):
        raise InvalidInput(f"labels ({len(labels)}) and frame_times ({len(frame_times)}) differ")
    if any(frame_times[i] >= frame_times[i + 1] for i in range(len(frame_times) - 1)):
        raise InvalidInput("frame_times must be strictly increasing")
    boundaries = [
        frame_times[i]
        for i in range(1, len(labels))
        if labels[i] != labels[i - 1]
    ]
    return segments_from_boundaries(boundaries, duration_s)


def segments_from_boundaries(boundaries: Sequence[float], duration_s: float) -> list[ClipSegment]:
    end = round_ms(duration_s)
    edges = [0.0]
    for b in sorted(boundaries):
        t = round_ms(b)
        if edges[-1] < t < end:
            edges.append(t)
    edges.append(end)
    return [ClipSegment(i, edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def _merge_short_clips(clips: list[ClipSegment], min_len: float) -> list[ClipSegment]:
    """Fold clips shorter than one embedding interval into their predecessor."""
    edges = [clips[0].start_s] + [c.end_s for c in clips]
    i = 1
    while i < len(edges) - 1:
        left = edges[i] - edges[i - 1]
        right = edges[i + 1] - edges[i]
        if left < min_len - 1e-9 or (right < min_len - 1e-9 and i == len(edges) - 2):
            del edges[i]
        else:
            i += 1
    return [ClipSegment(i, edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def clip_video(
    record: VideoRecord,
    gateway,
    scene_threshold: float = DEFAULT_SCENE_THRESHOLD,
    cluster_factor: float = DEFAULT_CLUSTER_FACTOR,
    embed_rate: float = DEFAULT_EMBED_RATE,
) -> list[ClipSegment]:
    """Scene cuts if the detector finds any; else the clustering path."""
    cuts = gateway.detect_scene_changes(record.video_id, scene_threshold)
    if cuts:
        return segments_from_boundaries(cuts, record.duration_s)

    if record.duration_s >= MIN_CLUSTER_DURATION_S:
        count = int(math.floor(record.duration_s * embed_rate))
        if count >= 2:
            times = [k / embed_rate for k in range(count)]
            indexes = [record.frame_at(t) for t in times]
            embeddings = gateway.embed_frames(record.video_id, indexes, embed_rate)
            threshold = clustering_auto_threshold(pairwise_distances(embeddings), cluster_factor)
            labels = agglomerative_cluster(embeddings, threshold)
            clips = extract_clip_boundaries(labels, times, record.duration_s)
            if len(clips) > 1:
                clips = _merge_short_clips(clips, 1.0 / embed_rate)
            return clips

    return segments_from_boundaries([], record.duration_s)
