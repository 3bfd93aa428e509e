"""Propagation runners: bi-directional over all slices, or one-sided.

Mode "all" anchors on every conditional slice (old prompts included) and
preserves conditional masks verbatim. Directional modes start from a reset
sequence seeded only with the chosen slice's prompts and rewrite that side
only; the opposite side stays bit-identical.
"""

from __future__ import annotations

from typing import Callable

from ..annotation.mask import MaskSlice
from ..annotation.session import Session
from ..predictor.base import ImagePredictor
from ..volume.model import SliceImage
from .jobs import JobHandle

Persist = Callable[[Session], None]


def run_all(session: Session, frames: list[SliceImage],
            predictor: ImagePredictor, persist: Persist,
            handle: JobHandle) -> str:
    with session.lock:
        prompts_by_slice = {s: e.prompts for s, e in session.conditional.items()}
    sequence = predictor.open_sequence(frames)
    for s in sorted(prompts_by_slice):
        sequence.add_prompts(s, prompts_by_slice[s])

    staging: dict[int, MaskSlice] = {}
    for t, mask in sequence.run("both"):
        if handle.cancelled():
            return "cancelled"
        if t in prompts_by_slice:
            continue  # conditional masks are preserved verbatim
        staging[t] = mask
        handle.progress(t)
    if handle.cancelled():
        return "cancelled"

    with session.mutate():
        overwritten = sorted(session.edited - prompts_by_slice.keys())
        session.set_propagated(staging)
    if overwritten:
        handle.warn(
            f"propagation overwrote manually edited slices {overwritten}; "
            "add a prompt to pin a slice"
        )
    persist(session)
    return "done"


def run_directional(session: Session, frames: list[SliceImage],
                    predictor: ImagePredictor, persist: Persist,
                    direction: str, from_slice: int,
                    handle: JobHandle) -> str:
    with session.lock:
        prompts = session.conditional[from_slice].prompts
    # a fresh sequence carries no prior prompt state: the reset contract
    sequence = predictor.open_sequence(frames)
    sequence.add_prompts(from_slice, prompts)

    staging: dict[int, MaskSlice] = {}
    root_mask: MaskSlice | None = None
    for t, mask in sequence.run(direction):
        if handle.cancelled():
            return "cancelled"
        if t == from_slice:
            root_mask = mask
            continue
        staging[t] = mask
        handle.progress(t)
    if handle.cancelled():
        return "cancelled"

    with session.mutate():
        overwritten = sorted(session.edited & staging.keys())
        if root_mask is not None:
            session.set_conditional_mask(from_slice, root_mask)
        session.overwrite_side(staging)
    if overwritten:
        handle.warn(
            f"directional propagation overwrote manually edited slices {overwritten}"
        )
    persist(session)
    return "done"
