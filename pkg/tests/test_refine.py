"""Brush geometry and morphology against scipy oracles."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from sliceseg.errors import OutOfBounds
from sliceseg.refine import BrushAction, BrushOp, MorphKind, apply_brush, morph

CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def brush(center, radius, action=BrushAction.PAINT, slice_index=0):
    return BrushOp(slice_index=slice_index, center=center, radius=radius,
                   action=action)


class TestBrush:
    def test_radius_zero_paints_single_pixel(self):
        mask = np.zeros((5, 6), dtype=bool)
        out = apply_brush(mask, brush((2, 3), 0))
        assert out[2, 3] and out.sum() == 1

    def test_radius_one_paints_cross(self):
        mask = np.zeros((5, 5), dtype=bool)
        out = apply_brush(mask, brush((2, 2), 1))
        expected = np.zeros((5, 5), dtype=bool)
        expected[2, 2] = expected[1, 2] = expected[3, 2] = True
        expected[2, 1] = expected[2, 3] = True
        np.testing.assert_array_equal(out, expected)

    def test_erase_on_empty_stays_empty(self):
        mask = np.zeros((4, 4), dtype=bool)
        out = apply_brush(mask, brush((1, 1), 2, BrushAction.ERASE))
        assert out.sum() == 0

    def test_clipped_at_borders(self):
        mask = np.zeros((4, 4), dtype=bool)
        out = apply_brush(mask, brush((0, 0), 2))
        assert out[0, 0] and not out[3, 3]

    def test_center_outside_rejected(self):
        with pytest.raises(OutOfBounds):
            apply_brush(np.zeros((4, 4), dtype=bool), brush((4, 0), 1))

    def test_radius_beyond_extent_rejected(self):
        with pytest.raises(OutOfBounds):
            apply_brush(np.zeros((4, 4), dtype=bool), brush((0, 0), 5))

    def test_locality(self):
        rng = np.random.default_rng(2)
        mask = rng.random((12, 12)) < 0.4
        op = brush((6, 6), 2.5)
        out = apply_brush(mask, op)
        rr, cc = np.ogrid[:12, :12]
        far = (rr - 6) ** 2 + (cc - 6) ** 2 > 2.5 ** 2
        np.testing.assert_array_equal(out[far], mask[far])

    def test_erase_after_paint_clears_disk_keeps_rest(self):
        rng = np.random.default_rng(8)
        mask = rng.random((10, 10)) < 0.5
        painted = apply_brush(mask, brush((5, 5), 2))
        erased = apply_brush(painted, brush((5, 5), 2, BrushAction.ERASE))
        rr, cc = np.ogrid[:10, :10]
        disk = (rr - 5) ** 2 + (cc - 5) ** 2 <= 4
        assert not erased[disk].any()
        np.testing.assert_array_equal(erased[~disk], mask[~disk])


def scipy_morph(mask, kind, radius):
    if kind is MorphKind.OPEN:
        eroded = ndimage.binary_erosion(mask, CROSS, iterations=radius,
                                        border_value=0)
        return ndimage.binary_dilation(eroded, CROSS, iterations=radius,
                                       border_value=0)
    dilated = ndimage.binary_dilation(mask, CROSS, iterations=radius,
                                      border_value=0)
    return ndimage.binary_erosion(dilated, CROSS, iterations=radius,
                                  border_value=0)


class TestMorph:
    def test_open_removes_isolated_pixel(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, 2] = True
        assert morph(mask, MorphKind.OPEN, 1).sum() == 0

    def test_close_fills_one_pixel_hole(self):
        mask = np.ones((5, 5), dtype=bool)
        mask[2, 2] = False
        out = morph(mask, MorphKind.CLOSE, 1)
        assert out[2, 2]
        np.testing.assert_array_equal(out, scipy_morph(mask, MorphKind.CLOSE, 1))

    def test_open_idempotent(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            mask = rng.random((9, 9)) < 0.55
            once = morph(mask, MorphKind.OPEN, 1)
            np.testing.assert_array_equal(once, morph(once, MorphKind.OPEN, 1))

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            mask = rng.random((8, 11)) < rng.uniform(0.3, 0.7)
            radius = int(rng.integers(1, 3))
            for kind in (MorphKind.OPEN, MorphKind.CLOSE):
                np.testing.assert_array_equal(
                    morph(mask, kind, radius), scipy_morph(mask, kind, radius)
                )

    def test_open_antiextensive_close_extensive(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            mask = rng.random((10, 10)) < 0.5
            assert (morph(mask, MorphKind.OPEN, 1) <= mask).all()
            assert (morph(mask, MorphKind.CLOSE, 1) >= mask).all()

    def test_radius_must_be_positive(self):
        with pytest.raises(ValueError):
            morph(np.zeros((3, 3), dtype=bool), MorphKind.OPEN, 0)
