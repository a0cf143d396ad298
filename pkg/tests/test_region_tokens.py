from __future__ import annotations

import numpy as np
import pytest

from videoforge.errors import InvalidInput
from videoforge.region_tokens import (
    FeatureMap,
    mask_pool,
    merge_groups,
    resize_bilinear,
    resize_masklet_to_grid,
    temporal_token_merge,
)


def _features(t=2, d=3, h=2, w=2, seed=0):
    rng = np.random.default_rng(seed)
    return FeatureMap(rng.standard_normal((t, d, h, w)))


# ---------------------------------------------------------------------------
# mask_pool
# ---------------------------------------------------------------------------

def test_pool_full_mask_is_global_mean():
    fm = _features()
    mask = np.ones((2, 2, 2), dtype=np.uint8)
    pooled = mask_pool(fm, mask)
    for t in range(2):
        assert np.allclose(pooled.tokens[t], fm.values[t].reshape(3, -1).mean(axis=1))


def test_pool_single_cell_is_exact_vector():
    fm = _features()
    mask = np.zeros((2, 2, 2), dtype=np.uint8)
    mask[:, 1, 0] = 1
    pooled = mask_pool(fm, mask)
    for t in range(2):
        assert np.array_equal(pooled.tokens[t], fm.values[t][:, 1, 0])


def test_pool_two_cells_hand_mean():
    values = np.zeros((1, 2, 2, 2))
    values[0, :, 0, 0] = [1.0, 3.0]
    values[0, :, 1, 1] = [5.0, 7.0]
    fm = FeatureMap(values)
    mask = np.zeros((1, 2, 2), dtype=np.uint8)
    mask[0, 0, 0] = 1
    mask[0, 1, 1] = 1
    pooled = mask_pool(fm, mask)
    assert pooled.tokens[0].tolist() == [3.0, 5.0]


def test_pool_empty_frame_rejected():
    fm = _features()
    mask = np.zeros((2, 2, 2), dtype=np.uint8)
    mask[0, 0, 0] = 1
    with pytest.raises(InvalidInput, match="no set cell"):
        mask_pool(fm, mask)


def test_pool_brute_force_oracle():
    rng = np.random.default_rng(3)
    for _ in range(25):
        t, d, h, w = (int(rng.integers(1, 5)) for _ in range(4))
        fm = FeatureMap(rng.standard_normal((t, d, h, w)))
        mask = np.zeros((t, h, w), dtype=np.uint8)
        for ti in range(t):
            k = int(rng.integers(1, h * w + 1))
            cells = rng.choice(h * w, size=k, replace=False)
            mask[ti].flat[cells] = 1
        pooled = mask_pool(fm, mask)
        for ti in range(t):
            for di in range(d):
                acc, count = 0.0, 0
                for yi in range(h):
                    for xi in range(w):
                        if mask[ti, yi, xi]:
                            acc += fm.values[ti, di, yi, xi]
                            count += 1
                assert pooled.tokens[ti, di] == pytest.approx(acc / count, abs=1e-9)


def test_pool_commutes_with_affine_maps():
    rng = np.random.default_rng(4)
    fm = _features(3, 4, 3, 3, seed=5)
    mask = (rng.random((3, 3, 3)) < 0.6).astype(np.uint8)
    mask[:, 0, 0] = 1
    a, b = 2.5, -1.25
    direct = mask_pool(FeatureMap(a * fm.values + b), mask).tokens
    derived = a * mask_pool(fm, mask).tokens + b
    assert np.allclose(direct, derived, atol=1e-12)


# ---------------------------------------------------------------------------
# temporal_token_merge
# ---------------------------------------------------------------------------

def test_merge_identity_when_target_equals_count():
    rng = np.random.default_rng(6)
    tokens = rng.standard_normal((5, 4))
    merged = temporal_token_merge(tokens, 5)
    assert np.array_equal(merged, tokens)
    assert merge_groups(tokens, 5) == [[0], [1], [2], [3], [4]]


def test_merge_all_identical_single_group():
    tokens = np.tile([1.0, 2.0, 2.0], (4, 1))
    merged = temporal_token_merge(tokens, 1)
    assert merged.shape == (1, 3)
    assert np.allclose(merged[0], [1.0, 2.0, 2.0])


def test_merge_orthogonal_tail_example():
    u = np.array([1.0, 0.0])
    v = np.array([0.0, 1.0])
    tokens = np.stack([u, u, v])
    assert merge_groups(tokens, 2) == [[0, 1], [2]]
    merged = temporal_token_merge(tokens, 2)
    assert np.allclose(merged, np.stack([u, v]))


def test_merge_single_group_returns_global_mean():
    rng = np.random.default_rng(7)
    tokens = rng.standard_normal((6, 3)) + 10.0  # keep norms well away from zero
    merged = temporal_token_merge(tokens, 1)
    assert np.allclose(merged[0], tokens.mean(axis=0))


def test_merge_exact_group_count_distinct_similarities():
    rng = np.random.default_rng(8)
    for _ in range(200):
        t = int(rng.integers(2, 12))
        tokens = rng.standard_normal((t, 5))
        sims = None
        target = int(rng.integers(1, t + 1))
        groups = merge_groups(tokens, target)
        assert len(groups) == target
        flat = [i for g in groups for i in g]
        assert flat == list(range(t))  # contiguous partition


def test_merge_groups_contiguous_under_duplicate_similarities():
    base = np.array([1.0, 0.0, 0.0])
    tokens = np.stack([base, base, base, [0.0, 1.0, 0.0], base, base])
    for target in range(1, 7):
        groups = merge_groups(tokens, target)
        assert len(groups) == target
        assert [i for g in groups for i in g] == list(range(6))


def test_merge_zero_norm_token_rejected():
    tokens = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InvalidInput, match="zero-norm"):
        temporal_token_merge(tokens, 2)


def test_merge_target_out_of_range():
    tokens = np.eye(3)
    with pytest.raises(InvalidInput):
        merge_groups(tokens, 0)
    with pytest.raises(InvalidInput):
        merge_groups(tokens, 4)


# ---------------------------------------------------------------------------
# resize_masklet_to_grid
# ---------------------------------------------------------------------------

def test_resize_identity_dims_unchanged():
    rng = np.random.default_rng(9)
    mask = (rng.random((6, 6)) < 0.5).astype(np.uint8)
    assert np.array_equal(resize_masklet_to_grid(mask, (6, 6)), mask)


def test_resize_solid_block_stays_solid():
    mask = np.ones((4, 4), dtype=np.uint8)
    assert np.array_equal(resize_masklet_to_grid(mask, (2, 2)), np.ones((2, 2), dtype=np.uint8))


def test_resize_vanishing_mask_keeps_argmax_cell():
    # one pixel at (0, 1) contributes weight only to the top-left sample;
    # the 0.5 threshold wipes it, so the argmax promotion must restore it
    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[0, 1] = 1
    interp = resize_bilinear(mask, (2, 2))
    assert interp.max() < 0.5
    resized = resize_masklet_to_grid(mask, (2, 2))
    assert resized.sum() == 1
    assert resized[0, 0] == 1

    # support can miss the pixel entirely; the promotion still sets one cell
    lone = np.zeros((8, 8), dtype=np.uint8)
    lone[3, 5] = 1
    assert resize_masklet_to_grid(lone, (2, 2)).sum() == 1


def test_resize_bilinear_matches_opencv():
    cv2 = pytest.importorskip("cv2")
    rng = np.random.default_rng(10)
    for _ in range(20):
        h, w = int(rng.integers(2, 24)), int(rng.integers(2, 24))
        th, tw = int(rng.integers(1, 24)), int(rng.integers(1, 24))
        grid = rng.random((h, w))
        ours = resize_bilinear(grid, (th, tw))
        theirs = cv2.resize(grid, (tw, th), interpolation=cv2.INTER_LINEAR)
        assert np.allclose(ours, theirs, atol=1e-9)


def test_resize_masklet_stack():
    stack = np.zeros((3, 4, 4), dtype=np.uint8)
    stack[:, 1:3, 1:3] = 1
    resized = resize_masklet_to_grid(stack, (2, 2))
    assert resized.shape == (3, 2, 2)
    assert all(r.any() for r in resized)
