"""Deterministic region-token math: mask pooling and temporal token merge.

Mask pooling averages feature vectors over the mask's set cells per frame.
Temporal token merge keeps the top (t_m - L_r) adjacent cosine similarities
as within-group links, which closes a group exactly where similarity drops
below the resulting threshold and yields L_r contiguous groups; duplicated
similarity values can under-shoot, in which case the largest groups are split
at their weakest internal boundary until exactly L_r groups exist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class FeatureMap:
    """Dense per-frame feature grid with shape (t_m, d_v, h_m, w_m)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 4 or min(v.shape) < 1:
            raise InvalidInput(f"feature map must be 4-D (t, d, h, w), got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def grid(self) -> tuple[int, int]:
        return self.values.shape[2], self.values.shape[3]


@dataclass(frozen=True)
class PooledTokens:
    """One pooled feature vector per masked frame, shape (t_m, d_v)."""

    tokens: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tokens, dtype=np.float64)
        if t.ndim != 2:
            raise InvalidInput(f"pooled tokens must be 2-D, got {t.shape}")
        object.__setattr__(self, "tokens", t)


def mask_pool(features: FeatureMap, mask_grid: np.ndarray) -> PooledTokens:
    """Per frame, average the feature vectors at the mask's set cells."""
    mask = np.asarray(mask_grid)
    expected = (features.frames, *features.grid)
    if mask.shape != expected:
        raise InvalidInput(f"mask grid shape {mask.shape} != feature grid {expected}")
    tokens = np.empty((features.frames, features.channels), dtype=np.float64)
    for t in range(features.frames):
        cells = mask[t].astype(bool)
        if not cells.any():
            raise InvalidInput(f"frame {t}: mask has no set cell")
        tokens[t] = features.values[t][:, cells].mean(axis=1)
    return PooledTokens(tokens)


def adjacent_similarities(tokens: np.ndarray) -> np.ndarray:
    """Cosine similarity between each pair of temporally adjacent tokens."""
    norms = np.linalg.norm(tokens, axis=1)
    if np.any(norms == 0):
        raise InvalidInput("zero-norm token: cosine similarity undefined")
    unit = tokens / norms[:, None]
    return np.sum(unit[:-1] * unit[1:], axis=1)


def merge_groups(tokens: np.ndarray, target_count: int) -> list[list[int]]:
    """Contiguous index groups produced by the similarity-threshold scan."""
    tokens = np.asarray(tokens, dtype=np.float64)
    t_m = tokens.shape[0]
    if not (1 <= target_count <= t_m):
        raise InvalidInput(f"target count {target_count} outside [1, {t_m}]")
    if target_count == t_m:
        return [[i] for i in range(t_m)]

    sims = adjacent_similarities(tokens)
    links_to_keep = t_m - target_count
    theta = np.sort(sims)[::-1][links_to_keep - 1]

    groups: list[list[int]] = [[0]]
    for i in range(t_m - 1):
        if sims[i] >= theta:
            groups[-1].append(i + 1)
        else:
            groups.append([i + 1])

    # Duplicate similarity values at theta can join too many boundaries;
    # split the largest groups at their weakest internal link until exact.
    while len(groups) < target_count:
        gi = max(range(len(groups)), key=lambda k: (len(groups[k]), -k))
        group = groups[gi]
        internal = [sims[group[j]] for j in range(len(group) - 1)]
        cut = int(np.argmin(internal))
        groups[gi:gi + 1] = [group[: cut + 1], group[cut + 1:]]
    return groups


def temporal_token_merge(tokens: np.ndarray, target_count: int) -> np.ndarray:
    """Condense t_m pooled tokens into exactly target_count merged tokens."""
    tokens = np.asarray(tokens, dtype=np.float64)
    groups = merge_groups(tokens, target_count)
    return np.stack([tokens[g].mean(axis=0) for g in groups])


def resize_bilinear(grid: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Bilinear resample of a 2-D grid to (height, width), edge-clamped."""
    src = np.asarray(grid, dtype=np.float64)
    h, w = src.shape
    th, tw = target
    if th < 1 or tw < 1:
        raise InvalidInput(f"target dims must be >= 1, got {target}")

    src_y = np.clip((np.arange(th) + 0.5) * (h / th) - 0.5, 0, h - 1)
    src_x = np.clip((np.arange(tw) + 0.5) * (w / tw) - 0.5, 0, w - 1)
    y0 = np.floor(src_y).astype(int)
    x0 = np.floor(src_x).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (src_y - y0)[:, None]
    wx = (src_x - x0)[None, :]

    top = src[np.ix_(y0, x0)] * (1 - wx) + src[np.ix_(y0, x1)] * wx
    bottom = src[np.ix_(y1, x0)] * (1 - wx) + src[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bottom * wy


def resize_masklet_to_grid(masklet_grid: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Resize binary masks to the feature grid and re-binarize at 0.5.

    Tiny masks that vanish under downsizing keep their single strongest cell
    so pooling always has at least one cell per frame.
    """
    grid = np.asarray(masklet_grid)
    single = grid.ndim == 2
    stack = grid[None] if single else grid
    out = np.zeros((stack.shape[0], *target), dtype=np.uint8)
    for t in range(stack.shape[0]):
        interp = resize_bilinear(stack[t], target)
        binary = (interp >= 0.5).astype(np.uint8)
        if not binary.any():
            idx = np.unravel_index(int(np.argmax(interp)), interp.shape)
            binary[idx] = 1
        out[t] = binary
    return out[0] if single else out
