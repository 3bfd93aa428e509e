"""Region growing against brute-force oracles; propagation step semantics."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from sliceseg.errors import DimsMismatch, NoPositiveSeeds
from sliceseg.native import (
    GrowParams,
    apply_negatives,
    dilate4,
    erode4,
    estimate_band,
    propagate_step,
    region_grow,
)

CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def flood_oracle(values, seeds, mu, tau, box=None):
    """Synchronous-dilation fixpoint flood fill; independent of the BFS."""
    band = (values >= mu - tau) & (values <= mu + tau)
    mask = np.zeros_like(band)
    for r, c in seeds:
        if band[r, c]:
            mask[r, c] = True
    while True:
        neighbors = np.zeros_like(mask)
        neighbors[1:, :] |= mask[:-1, :]
        neighbors[:-1, :] |= mask[1:, :]
        neighbors[:, 1:] |= mask[:, :-1]
        neighbors[:, :-1] |= mask[:, 1:]
        grown = mask | (band & neighbors)
        if (grown == mask).all():
            break
        mask = grown
    if box is not None:
        r0, c0, r1, c1 = box
        clip = np.zeros_like(mask)
        clip[r0:r1 + 1, c0:c1 + 1] = True
        mask = mask & clip
    return mask


def negatives_oracle(mask, negatives):
    """Connected-component labeling route (scipy), 4-connectivity."""
    labels, _ = ndimage.label(mask, structure=CROSS)
    kill = {labels[r, c] for r, c in negatives
            if 0 <= r < mask.shape[0] and 0 <= c < mask.shape[1] and mask[r, c]}
    if not kill:
        return mask.copy()
    return mask & ~np.isin(labels, sorted(kill))


def split_slice():
    """5x5: left three columns at 100, right two at 200."""
    values = np.full((5, 5), 100.0, dtype=np.float32)
    values[:, 3:] = 200.0
    return values


class TestEstimateBand:
    def test_mean_and_fraction(self):
        values = np.zeros((3, 3), dtype=np.float32)
        values[0, 0] = 100.0
        values[0, 1] = 120.0
        values[2, 2] = 200.0
        mu, tau = estimate_band(values, [(0, 0), (0, 1)], 0.1)
        assert mu == 110.0
        assert tau == pytest.approx(20.0)

    def test_constant_slice_zero_tau(self):
        values = np.full((3, 3), 7.0, dtype=np.float32)
        mu, tau = estimate_band(values, [(1, 1)], 0.1)
        assert (mu, tau) == (7.0, 0.0)
        grown = region_grow(values, [(1, 1)], mu, tau)
        assert grown.mask.all()

    def test_no_positive_seeds(self):
        with pytest.raises(NoPositiveSeeds):
            estimate_band(np.zeros((2, 2), dtype=np.float32), [], 0.1)


class TestRegionGrow:
    def test_split_slice_left_region(self):
        values = split_slice()
        result = region_grow(values, [(2, 0)], mu=100.0, tau=10.0)
        expected = flood_oracle(values, [(2, 0)], 100.0, 10.0)
        np.testing.assert_array_equal(result.mask, expected)
        assert result.mask.sum() == 15

    def test_box_clip(self):
        values = split_slice()
        result = region_grow(values, [(2, 0)], 100.0, 10.0, box=(0, 0, 2, 2))
        expected = flood_oracle(values, [(2, 0)], 100.0, 10.0, box=(0, 0, 2, 2))
        np.testing.assert_array_equal(result.mask, expected)
        assert result.mask.sum() == 9

    def test_uniform_slice_fills(self):
        values = np.full((4, 6), 3.0, dtype=np.float32)
        result = region_grow(values, [(0, 0)], 3.0, 0.0)
        assert result.mask.all() and not result.truncated

    def test_out_of_band_seed_skipped(self):
        values = split_slice()
        result = region_grow(values, [(0, 4)], 100.0, 10.0)
        assert result.mask.sum() == 0

    def test_truncation_flag(self):
        values = np.zeros((4, 4), dtype=np.float32)
        result = region_grow(values, [(0, 0)], 0.0, 1.0, max_region_fraction=0.5)
        assert result.truncated
        assert result.mask.sum() == 8

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(123)
        for _ in range(300):
            rows = int(rng.integers(1, 17))
            cols = int(rng.integers(1, 17))
            values = rng.integers(0, 8, size=(rows, cols)).astype(np.float32)
            n_seeds = int(rng.integers(1, 4))
            seeds = [(int(rng.integers(rows)), int(rng.integers(cols)))
                     for _ in range(n_seeds)]
            mu = float(rng.uniform(0, 7))
            tau = float(rng.uniform(0, 4))
            box = None
            if rng.random() < 0.4 and rows > 1 and cols > 1:
                r0, r1 = sorted(rng.choice(rows, 2, replace=False))
                c0, c1 = sorted(rng.choice(cols, 2, replace=False))
                box = (int(r0), int(c0), int(r1), int(c1))
            result = region_grow(values, seeds, mu, tau, box=box)
            expected = flood_oracle(values, seeds, mu, tau, box=box)
            np.testing.assert_array_equal(result.mask, expected)

    def test_tau_monotonicity(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            values = rng.integers(0, 10, size=(8, 8)).astype(np.float32)
            seed = [(int(rng.integers(8)), int(rng.integers(8)))]
            mu = float(values[seed[0]])
            small = region_grow(values, seed, mu, 1.0).mask
            large = region_grow(values, seed, mu, 3.0).mask
            assert (small <= large).all()

    def test_contains_accepted_seeds_and_connected(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            values = rng.integers(0, 5, size=(10, 10)).astype(np.float32)
            seeds = [(int(rng.integers(10)), int(rng.integers(10)))
                     for _ in range(3)]
            mu, tau = 2.0, 1.0
            mask = region_grow(values, seeds, mu, tau).mask
            for r, c in seeds:
                if mu - tau <= values[r, c] <= mu + tau:
                    assert mask[r, c]
            if mask.any():
                labels, count = ndimage.label(mask, structure=CROSS)
                seeded = {labels[r, c] for r, c in seeds if mask[r, c]}
                assert seeded == set(range(1, count + 1))

    def test_bit_determinism(self):
        rng = np.random.default_rng(77)
        values = rng.integers(0, 6, size=(12, 12)).astype(np.float32)
        a = region_grow(values, [(3, 3), (8, 8)], 3.0, 2.0, max_region_fraction=0.7)
        b = region_grow(values, [(8, 8), (3, 3)], 3.0, 2.0, max_region_fraction=0.7)
        np.testing.assert_array_equal(a.mask, b.mask)
        assert a.truncated == b.truncated


class TestApplyNegatives:
    def test_single_component_removed(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[1:3, 1:3] = True
        result = apply_negatives(mask, [(1, 1)])
        assert result.sum() == 0

    def test_other_component_survives(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[0, 0:2] = True
        mask[4, 3:5] = True
        result = apply_negatives(mask, [(0, 0)])
        np.testing.assert_array_equal(result, negatives_oracle(mask, [(0, 0)]))
        assert result[4, 3] and result[4, 4] and result.sum() == 2

    def test_negative_outside_mask(self):
        mask = np.zeros((3, 3), dtype=bool)
        mask[0, 0] = True
        result = apply_negatives(mask, [(2, 2)])
        np.testing.assert_array_equal(result, mask)

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(31)
        for _ in range(300):
            rows = int(rng.integers(1, 13))
            cols = int(rng.integers(1, 13))
            mask = rng.random((rows, cols)) < 0.5
            negatives = [(int(rng.integers(rows)), int(rng.integers(cols)))
                         for _ in range(int(rng.integers(0, 4)))]
            np.testing.assert_array_equal(
                apply_negatives(mask, negatives),
                negatives_oracle(mask, negatives),
            )

    def test_subset_and_idempotent(self):
        rng = np.random.default_rng(13)
        mask = rng.random((9, 9)) < 0.6
        negatives = [(4, 4), (0, 8)]
        once = apply_negatives(mask, negatives)
        assert (once <= mask).all()
        np.testing.assert_array_equal(once, apply_negatives(once, negatives))


class TestErosionHelpers:
    def test_against_scipy(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            mask = rng.random((7, 9)) < 0.6
            np.testing.assert_array_equal(
                erode4(mask),
                ndimage.binary_erosion(mask, structure=CROSS, border_value=0),
            )
            np.testing.assert_array_equal(
                dilate4(mask),
                ndimage.binary_dilation(mask, structure=CROSS, border_value=0),
            )


class TestPropagateStep:
    def test_empty_previous_mask(self):
        values = np.zeros((4, 4), dtype=np.float32)
        result = propagate_step(np.zeros((4, 4), dtype=bool), values, values,
                                GrowParams())
        assert result.sum() == 0

    def test_identical_slices_stable_region(self):
        values = np.full((9, 9), 10.0, dtype=np.float32)
        values[2:7, 2:7] = 200.0
        prev_mask = values == 200.0
        result = propagate_step(prev_mask, values, values, GrowParams())
        # oracle: regrow from the eroded seeds, band centered on their
        # previous-slice mean, on the identical slice
        seeds = [tuple(rc) for rc in np.argwhere(erode4(prev_mask))]
        mu = float(values[erode4(prev_mask)].mean())
        tau = 0.1 * (values.max() - values.min())
        expected = region_grow(values, seeds, mu, tau).mask
        np.testing.assert_array_equal(result, expected)
        np.testing.assert_array_equal(result, prev_mask)

    def test_far_band_terminates(self):
        prev_values = np.full((5, 5), 200.0, dtype=np.float32)
        prev_mask = np.ones((5, 5), dtype=bool)
        next_values = np.full((5, 5), 10.0, dtype=np.float32)
        # object band sits at 200, the uniform next slice at 10 (tau = 0)
        result = propagate_step(prev_mask, prev_values, next_values, GrowParams())
        assert result.sum() == 0

    def test_erosion_fallback_for_thin_masks(self):
        values = np.full((5, 5), 50.0, dtype=np.float32)
        prev_mask = np.zeros((5, 5), dtype=bool)
        prev_mask[2, 2] = True  # erosion would empty it
        result = propagate_step(prev_mask, values, values, GrowParams())
        assert result.all()  # constant slice, tau 0, everything equals mu

    def test_dims_mismatch(self):
        with pytest.raises(DimsMismatch):
            propagate_step(np.zeros((2, 2), dtype=bool),
                           np.zeros((2, 2), dtype=np.float32),
                           np.zeros((3, 3), dtype=np.float32), GrowParams())
