"""Annotation session: prompt memory, accepted masks, undo history.

A session is single-writer. All mutations happen inside ``session.mutate()``
which takes one undo snapshot, bumps the revision once, and rolls state back
if the block raises, so multi-step operations are atomic.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass

from ..errors import (
    IndexOutOfRange,
    NothingToRedo,
    NothingToUndo,
    OutOfBounds,
)
from ..volume.model import Axis, num_slices, slice_dims
from .mask import MaskSlice
from .prompts import BoxPrompt, PointPrompt, PromptSet

UNDO_DEPTH = 64


@dataclass(frozen=True)
class ConditionalSlice:
    """A prompted slice: its prompts and the mask accepted from them."""

    prompts: PromptSet
    mask: MaskSlice | None = None


@dataclass(frozen=True)
class _Snapshot:
    conditional: dict[int, ConditionalSlice]
    propagated: dict[int, MaskSlice]
    edited: frozenset[int]


class Session:
    def __init__(self, session_id: str, volume_id: str, volume_digest: str,
                 dims: tuple[int, int, int], axis: Axis, label_id: int,
                 predictor_id: str, window: float, level: float):
        self.session_id = session_id
        self.volume_id = volume_id
        self.volume_digest = volume_digest
        self.dims = dims
        self.axis = axis
        self.label_id = label_id
        self.predictor_id = predictor_id
        self.window = window
        self.level = level
        self.rows, self.cols = slice_dims(dims, axis)
        self.n_slices = num_slices(dims, axis)
        self.conditional: dict[int, ConditionalSlice] = {}
        self.propagated: dict[int, MaskSlice] = {}
        self.edited: set[int] = set()
        self.revision = 0
        self.lock = threading.RLock()
        self._undo: list[_Snapshot] = []
        self._redo: list[_Snapshot] = []
        self._mutating = False

    # -- state management ---------------------------------------------------

    def _snapshot(self) -> _Snapshot:
        return _Snapshot(dict(self.conditional), dict(self.propagated),
                         frozenset(self.edited))

    def _restore(self, snap: _Snapshot):
        self.conditional = dict(snap.conditional)
        self.propagated = dict(snap.propagated)
        self.edited = set(snap.edited)

    @contextmanager
    def mutate(self):
        """One atomic mutation: snapshot, run, bump revision; roll back on error."""
        with self.lock:
            if self._mutating:
                # nested block joins the enclosing mutation
                yield self
                return
            snap = self._snapshot()
            self._mutating = True
            try:
                yield self
            except BaseException:
                self._restore(snap)
                raise
            finally:
                self._mutating = False
            self._undo.append(snap)
            if len(self._undo) > UNDO_DEPTH:
                del self._undo[0]
            self._redo.clear()
            self.revision += 1
            self.audit()

    def undo(self) -> int:
        with self.lock:
            if not self._undo:
                raise NothingToUndo("no prior revision")
            self._redo.append(self._snapshot())
            self._restore(self._undo.pop())
            self.revision += 1
            self.audit()
            return self.revision

    def redo(self) -> int:
        with self.lock:
            if not self._redo:
                raise NothingToRedo("nothing to redo")
            self._undo.append(self._snapshot())
            self._restore(self._redo.pop())
            self.revision += 1
            self.audit()
            return self.revision

    def audit(self):
        """Internal consistency: conditional and propagated never share a slice."""
        overlap = self.conditional.keys() & self.propagated.keys()
        if overlap:
            raise AssertionError(f"conditional/propagated overlap on {sorted(overlap)}")

    # -- mutations (call inside mutate()) ------------------------------------

    def _check_slice(self, slice_index: int):
        if not 0 <= slice_index < self.n_slices:
            raise IndexOutOfRange(
                f"slice {slice_index} outside [0, {self.n_slices})"
            )

    def add_prompt(self, slice_index: int, prompt: PointPrompt | BoxPrompt):
        """Extend the slice's prompt set; the slice becomes conditional and
        any propagated mask for it is dropped pending re-prediction."""
        self._check_slice(slice_index)
        existing = self.conditional.get(slice_index)
        prompts = existing.prompts if existing else PromptSet(slice_index)
        if isinstance(prompt, PointPrompt):
            prompts = prompts.with_point(prompt)
        elif isinstance(prompt, BoxPrompt):
            prompts = prompts.with_box(prompt)
        else:
            raise TypeError(f"unsupported prompt {type(prompt).__name__}")
        prompts.validate_bounds(self.rows, self.cols)
        self.conditional[slice_index] = ConditionalSlice(
            prompts=prompts, mask=existing.mask if existing else None
        )
        self.propagated.pop(slice_index, None)

    def set_conditional_mask(self, slice_index: int, mask: MaskSlice):
        entry = self.conditional.get(slice_index)
        if entry is None:
            raise IndexOutOfRange(f"slice {slice_index} is not conditional")
        self._check_mask(mask)
        self.conditional[slice_index] = ConditionalSlice(entry.prompts, mask)

    def set_propagated(self, staging: dict[int, MaskSlice]):
        """Replace the whole propagated map (mode-all commit)."""
        for slice_index, mask in staging.items():
            self._check_slice(slice_index)
            self._check_mask(mask)
            if slice_index in self.conditional:
                raise AssertionError(f"slice {slice_index} is conditional")
        self.propagated = dict(staging)
        self.edited -= set(staging)

    def overwrite_side(self, staging: dict[int, MaskSlice]):
        """Rewrite specific slices (directional commit); conditional slices in
        staging get their accepted mask replaced, others land in propagated."""
        for slice_index, mask in staging.items():
            self._check_slice(slice_index)
            self._check_mask(mask)
            entry = self.conditional.get(slice_index)
            if entry is not None:
                self.conditional[slice_index] = ConditionalSlice(entry.prompts, mask)
            else:
                self.propagated[slice_index] = mask
            self.edited.discard(slice_index)

    def set_edited_mask(self, slice_index: int, mask: MaskSlice):
        """Store a manually edited mask and mark the slice."""
        self._check_slice(slice_index)
        self._check_mask(mask)
        entry = self.conditional.get(slice_index)
        if entry is not None:
            self.conditional[slice_index] = ConditionalSlice(entry.prompts, mask)
        else:
            self.propagated[slice_index] = mask
        self.edited.add(slice_index)

    def _check_mask(self, mask: MaskSlice):
        if (mask.rows, mask.cols) != (self.rows, self.cols):
            raise OutOfBounds(
                f"mask {mask.rows}x{mask.cols} does not match "
                f"{self.rows}x{self.cols} slices"
            )

    # -- queries -------------------------------------------------------------

    def mask_for(self, slice_index: int) -> MaskSlice | None:
        entry = self.conditional.get(slice_index)
        if entry is not None and entry.mask is not None:
            return entry.mask
        return self.propagated.get(slice_index)
