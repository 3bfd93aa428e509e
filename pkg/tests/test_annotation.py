"""Masks, RLE transport, dice, prompt validation, session history."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sliceseg.annotation import (
    BoxPrompt,
    MaskSlice,
    PointPrompt,
    Polarity,
    PromptSet,
    SegmentationVolume,
    Session,
    UNDO_DEPTH,
    dice,
    rle_decode,
    rle_encode,
)
from sliceseg.errors import (
    DimsMismatch,
    InvalidPromptSet,
    NothingToRedo,
    NothingToUndo,
    OutOfBounds,
    RunSumMismatch,
)
from sliceseg.volume.model import Axis


def mask_of(rows, cols, flat_bits):
    return MaskSlice(rows, cols, np.array(flat_bits, dtype=bool).reshape(rows, cols))


class TestRle:
    def test_all_zero(self):
        assert rle_encode(MaskSlice.empty(2, 2)) == [4]

    def test_all_one(self):
        assert rle_encode(mask_of(2, 2, [1, 1, 1, 1])) == [0, 4]

    def test_mixed(self):
        assert rle_encode(mask_of(2, 2, [0, 1, 1, 0])) == [1, 2, 1]

    def test_decode_examples(self):
        assert rle_decode([4], 2, 2) == MaskSlice.empty(2, 2)
        assert rle_decode([0, 4], 2, 2) == mask_of(2, 2, [1, 1, 1, 1])
        assert rle_decode([1, 2, 1], 2, 2) == mask_of(2, 2, [0, 1, 1, 0])

    def test_sum_mismatch(self):
        with pytest.raises(RunSumMismatch):
            rle_decode([3], 2, 2)
        with pytest.raises(RunSumMismatch):
            rle_decode([5], 2, 2)
        with pytest.raises(RunSumMismatch):
            rle_decode([-1, 5], 2, 2)

    def test_round_trip_random(self):
        rng = np.random.default_rng(42)
        for _ in range(500):
            rows = int(rng.integers(1, 12))
            cols = int(rng.integers(1, 12))
            mask = MaskSlice(rows, cols, rng.random((rows, cols)) < rng.random())
            assert rle_decode(rle_encode(mask), rows, cols) == mask

    @settings(max_examples=200)
    @given(st.lists(st.booleans(), min_size=1, max_size=64), st.integers(1, 8))
    def test_round_trip_hypothesis(self, bits, cols):
        rows = (len(bits) + cols - 1) // cols
        bits = bits + [False] * (rows * cols - len(bits))
        mask = mask_of(rows, cols, bits)
        assert rle_decode(rle_encode(mask), rows, cols) == mask


class TestDice:
    def test_identical_nonempty(self):
        m = mask_of(2, 2, [1, 0, 1, 0])
        assert dice(m, m) == 1.0

    def test_disjoint(self):
        assert dice(mask_of(2, 2, [1, 0, 0, 0]), mask_of(2, 2, [0, 1, 0, 0])) == 0.0

    def test_half_overlap(self):
        a = mask_of(2, 2, [1, 1, 0, 0])
        b = mask_of(2, 2, [0, 1, 1, 0])
        assert dice(a, b) == 0.5

    def test_both_empty(self):
        assert dice(MaskSlice.empty(3, 3), MaskSlice.empty(3, 3)) == 1.0

    def test_dims_mismatch(self):
        with pytest.raises(DimsMismatch):
            dice(MaskSlice.empty(2, 2), MaskSlice.empty(2, 3))

    def test_symmetry_and_flip_bound(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            a_bits = rng.random((6, 6)) < 0.5
            b_bits = rng.random((6, 6)) < 0.5
            a, b = MaskSlice.from_array(a_bits), MaskSlice.from_array(b_bits)
            assert dice(a, b) == dice(b, a)
            size = int(a_bits.sum() + b_bits.sum())
            if size == 0:
                continue
            flipped = b_bits.copy()
            r, c = rng.integers(0, 6, size=2)
            flipped[r, c] = ~flipped[r, c]
            delta = abs(dice(a, b) - dice(a, MaskSlice.from_array(flipped)))
            assert delta <= 2.0 / size + 1e-12


class TestPrompts:
    def test_box_must_be_ordered(self):
        with pytest.raises(OutOfBounds):
            BoxPrompt(r0=3, c0=0, r1=1, c1=2)

    def test_prompt_set_needs_seed(self):
        negative_only = PromptSet(0, points=(
            PointPrompt(1, 1, Polarity.NEGATIVE),
        ))
        with pytest.raises(InvalidPromptSet):
            negative_only.require_seedable()
        PromptSet(0, points=(PointPrompt(1, 1),)).require_seedable()
        PromptSet(0, box=BoxPrompt(0, 0, 1, 1)).require_seedable()

    def test_bounds_validation(self):
        prompts = PromptSet(0, points=(PointPrompt(4, 0),))
        with pytest.raises(OutOfBounds):
            prompts.validate_bounds(4, 4)
        prompts.validate_bounds(5, 4)


class TestSegmentationVolume:
    def test_merge_and_dense(self):
        seg = SegmentationVolume((2, 2, 2), Axis.K)
        seg.merge_mask(1, 0, mask_of(2, 2, [1, 0, 0, 0]))
        dense = seg.to_dense()
        assert dense[0] == 1 and dense[1:].sum() == 0

    def test_merge_empty_removes(self):
        seg = SegmentationVolume((2, 2, 2), Axis.K)
        seg.merge_mask(1, 0, mask_of(2, 2, [1, 0, 0, 0]))
        seg.merge_mask(1, 0, MaskSlice.empty(2, 2))
        assert seg.labels == {}

    def test_merge_idempotent(self):
        seg = SegmentationVolume((2, 2, 2), Axis.K)
        m = mask_of(2, 2, [1, 1, 0, 0])
        seg.merge_mask(2, 1, m)
        seg.merge_mask(2, 1, m)
        assert (seg.to_dense() == np.array([0, 0, 0, 0, 2, 2, 0, 0])).all()

    def test_lowest_label_wins_on_overlap(self):
        seg = SegmentationVolume((2, 2, 2), Axis.K)
        seg.merge_mask(5, 0, mask_of(2, 2, [1, 1, 0, 0]))
        seg.merge_mask(2, 0, mask_of(2, 2, [0, 1, 1, 0]))
        dense = seg.to_dense()
        assert dense[0] == 5 and dense[1] == 2 and dense[2] == 2

    def test_dims_mismatch(self):
        seg = SegmentationVolume((2, 2, 2), Axis.K)
        with pytest.raises(DimsMismatch):
            seg.merge_mask(1, 0, MaskSlice.empty(3, 3))


def fresh_session(n=4):
    return Session(
        session_id="s", volume_id="v", volume_digest="d",
        dims=(n, n, n), axis=Axis.K, label_id=1, predictor_id="native",
        window=255.0, level=127.5,
    )


class TestSession:
    def test_add_prompt_makes_conditional(self):
        session = fresh_session()
        with session.mutate():
            session.add_prompt(2, PointPrompt(1, 1))
        assert set(session.conditional) == {2}
        assert session.revision == 1

    def test_second_prompt_extends_set(self):
        session = fresh_session()
        with session.mutate():
            session.add_prompt(2, PointPrompt(1, 1))
        with session.mutate():
            session.add_prompt(2, PointPrompt(0, 0, Polarity.NEGATIVE))
        assert set(session.conditional) == {2}
        assert len(session.conditional[2].prompts.points) == 2

    def test_prompt_out_of_bounds(self):
        session = fresh_session()
        with pytest.raises(OutOfBounds):
            with session.mutate():
                session.add_prompt(0, PointPrompt(4, 0))
        assert session.conditional == {} and session.revision == 0

    def test_prompt_invalidates_propagated(self):
        session = fresh_session()
        with session.mutate():
            session.set_propagated({1: MaskSlice.empty(4, 4)})
        with session.mutate():
            session.add_prompt(1, PointPrompt(0, 0))
        assert 1 not in session.propagated
        session.audit()

    def test_undo_redo_round_trip(self):
        session = fresh_session()
        with session.mutate():
            session.add_prompt(2, PointPrompt(1, 1))
        before = dict(session.conditional)
        with session.mutate():
            session.add_prompt(3, PointPrompt(1, 2))
        session.undo()
        assert dict(session.conditional) == before
        session.redo()
        assert set(session.conditional) == {2, 3}

    def test_undo_on_fresh_session(self):
        with pytest.raises(NothingToUndo):
            fresh_session().undo()

    def test_redo_cleared_by_new_mutation(self):
        session = fresh_session()
        with session.mutate():
            session.add_prompt(1, PointPrompt(0, 0))
        session.undo()
        with session.mutate():
            session.add_prompt(2, PointPrompt(0, 0))
        with pytest.raises(NothingToRedo):
            session.redo()

    def test_undo_depth_capped(self):
        session = fresh_session(n=80)
        for i in range(UNDO_DEPTH + 10):
            with session.mutate():
                session.add_prompt(i, PointPrompt(0, 0))
        for _ in range(UNDO_DEPTH):
            session.undo()
        with pytest.raises(NothingToUndo):
            session.undo()

    def test_audit_runs_after_each_operation(self):
        session = fresh_session()
        with session.mutate():
            session.add_prompt(1, PointPrompt(0, 0))
            session.set_conditional_mask(1, MaskSlice.empty(4, 4))
        session.audit()

    def test_mutate_rolls_back_on_error(self):
        session = fresh_session()
        with pytest.raises(RuntimeError):
            with session.mutate():
                session.add_prompt(1, PointPrompt(0, 0))
                raise RuntimeError("boom")
        assert session.conditional == {}
        assert session.revision == 0
