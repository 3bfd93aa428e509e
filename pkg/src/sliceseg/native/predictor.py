"""Built-in deterministic predictor over the rendered 8-bit slices.

2D prediction is seeded region growing; sequences chain masks slice to
slice from each prompted frame, assigning every target frame to the chain
of its nearest prompted frame (ties to the lower index). Everything is a
pure function of the inputs, so repeated runs are bit-identical.
"""

from __future__ import annotations

import logging
import struct
from typing import Iterator

import numpy as np

from ..annotation.mask import MaskSlice
from ..annotation.prompts import PromptSet
from ..errors import (
    IndexOutOfRange,
    NoPromptedSlices,
    SequenceBusy,
)
from ..predictor.base import (
    Capabilities,
    DIRECTIONS,
    ImagePredictor,
    PredictorDescriptor,
    SequenceHandle,
)
from ..volume.model import SliceImage
from .grow import GrowParams, apply_negatives, estimate_band, region_grow
from .propagate import propagate_step

log = logging.getLogger("sliceseg.native")

NATIVE_ID = "native"

_BLOB_HEADER = struct.Struct("<II")


def predict_grid(values: np.ndarray, prompts: PromptSet, params: GrowParams) -> np.ndarray:
    """Prompt-conditioned mask on one scalar grid."""
    prompts.require_seedable()
    positives = [(p.row, p.col) for p in prompts.positives]
    box = None
    if prompts.box is not None:
        box = (prompts.box.r0, prompts.box.c0, prompts.box.r1, prompts.box.c1)
    if positives:
        mu, tau = estimate_band(values, positives, params.tolerance_fraction)
        seeds = positives
    else:
        # box-only prompt: every pixel in the box seeds, band from the box mean
        r0, c0, r1, c1 = box
        region = values[r0:r1 + 1, c0:c1 + 1]
        mu = float(region.mean())
        tau = params.tolerance_fraction * (float(values.max()) - float(values.min()))
        seeds = [(r, c) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)]
    result = region_grow(values, seeds, mu, tau, box=box,
                         max_region_fraction=params.max_region_fraction)
    if result.truncated:
        log.warning("region growth truncated at max_region_fraction=%s",
                    params.max_region_fraction)
    mask = apply_negatives(result.mask,
                           [(p.row, p.col) for p in prompts.negatives])
    return mask


class NativePredictor(ImagePredictor):
    def __init__(self, params: GrowParams | None = None):
        self.params = params or GrowParams()
        self.descriptor = PredictorDescriptor(
            id=NATIVE_ID, family="native", variant="n/a",
            capabilities=Capabilities(
                supports_box=True, supports_sequence=True,
                supports_negative_points=True,
            ),
        )
        # instrumentation: exact counters the tests and diagnostics rely on
        self.encode_calls = 0
        self.sequence_prompt_log: list[tuple[int, int]] = []

    def encode(self, img: SliceImage) -> bytes:
        self.encode_calls += 1
        return _BLOB_HEADER.pack(img.rows, img.cols) + img.pixels.tobytes()

    def predict(self, blob: bytes, prompts: PromptSet) -> MaskSlice:
        rows, cols = _BLOB_HEADER.unpack_from(blob)
        values = np.frombuffer(blob, dtype=np.uint8, count=rows * cols,
                               offset=_BLOB_HEADER.size)
        values = values.reshape(rows, cols).astype(np.float32)
        prompts.validate_bounds(rows, cols)
        return MaskSlice(rows, cols, predict_grid(values, prompts, self.params))

    def open_sequence(self, frames: list[SliceImage]) -> "NativeSequenceHandle":
        self.sequence_prompt_log = []
        return NativeSequenceHandle(self, frames)


class NativeSequenceHandle(SequenceHandle):
    def __init__(self, predictor: NativePredictor, frames: list[SliceImage]):
        if not frames:
            raise ValueError("sequence needs at least one frame")
        self._predictor = predictor
        self._grids = [f.pixels.astype(np.float32) for f in frames]
        self._rows = frames[0].rows
        self._cols = frames[0].cols
        self._prompts: dict[int, PromptSet] = {}
        self._running = False

    def add_prompts(self, position: int, prompts: PromptSet):
        if not 0 <= position < len(self._grids):
            raise IndexOutOfRange(
                f"frame {position} outside [0, {len(self._grids)})"
            )
        prompts.require_seedable()
        prompts.validate_bounds(self._rows, self._cols)
        self._prompts[position] = prompts
        self._predictor.sequence_prompt_log.append((position, len(prompts.points)))

    def reset(self):
        self._prompts.clear()

    def run(self, direction: str) -> Iterator[tuple[int, MaskSlice]]:
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if not self._prompts:
            raise NoPromptedSlices("no prompted frames since open or reset")
        if self._running:
            raise SequenceBusy("a run is already streaming on this handle")
        self._running = True
        return self._run(direction)

    def _targets(self, direction: str) -> list[int]:
        n = len(self._grids)
        prompted = sorted(self._prompts)
        if direction == "both":
            return list(range(n))
        if direction == "right":
            return list(range(min(prompted), n))
        return list(range(0, max(prompted) + 1))

    def _assign_root(self, t: int, direction: str) -> int:
        """Nearest prompted frame on the allowed side; ties go lower."""
        prompted = sorted(self._prompts)
        if direction == "right":
            candidates = [s for s in prompted if s <= t]
        elif direction == "left":
            candidates = [s for s in prompted if s >= t]
        else:
            candidates = prompted
        return min(candidates, key=lambda s: (abs(t - s), s))

    def _run(self, direction: str) -> Iterator[tuple[int, MaskSlice]]:
        try:
            params = self._predictor.params
            targets = self._targets(direction)
            roots = {
                s: predict_grid(self._grids[s], ps, params)
                for s, ps in self._prompts.items()
            }
            assignment = {t: self._assign_root(t, direction) for t in targets}

            # walk each chain outward from its root, reusing the shared
            # propagation step; an empty step empties the rest of that side
            chains: dict[int, dict[int, np.ndarray]] = {}
            for s in sorted(roots):
                chain = {s: roots[s]}
                span = [t for t, root in assignment.items() if root == s]
                if span:
                    for step in (1, -1):
                        limit = max(span) if step == 1 else min(span)
                        mask = roots[s]
                        t = s + step
                        while (t <= limit if step == 1 else t >= limit):
                            if mask.any():
                                mask = propagate_step(
                                    mask, self._grids[t - step], self._grids[t], params
                                )
                            else:
                                mask = np.zeros_like(mask)
                            chain[t] = mask
                            t += step
                chains[s] = chain

            order = sorted(targets, key=lambda t: (abs(t - assignment[t]), t))
            for t in order:
                bits = chains[assignment[t]][t]
                yield t, MaskSlice(self._rows, self._cols, bits)
        finally:
            self._running = False
