"""Manual mask editing: circular brush and morphological cleanup."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import OutOfBounds
from ..native.grow import dilate4, erode4


class BrushAction(str, Enum):
    PAINT = "paint"
    ERASE = "erase"


class MorphKind(str, Enum):
    OPEN = "open"
    CLOSE = "close"


@dataclass(frozen=True)
class BrushOp:
    slice_index: int
    center: tuple[int, int]
    radius: float
    action: BrushAction

    def __post_init__(self):
        if self.radius < 0:
            raise OutOfBounds(f"negative brush radius {self.radius}")


def apply_brush(mask: np.ndarray, op: BrushOp) -> np.ndarray:
    """Set (paint) or clear (erase) the disk of pixels within Euclidean
    distance ``radius`` of the center, clipped at the slice borders."""
    rows, cols = mask.shape
    cr, cc = op.center
    if not (0 <= cr < rows and 0 <= cc < cols):
        raise OutOfBounds(f"brush center ({cr},{cc}) outside {rows}x{cols} slice")
    if op.radius > max(rows, cols):
        raise OutOfBounds(f"brush radius {op.radius} exceeds slice extent")
    rr, cc_grid = np.ogrid[:rows, :cols]
    disk = (rr - cr) ** 2 + (cc_grid - cc) ** 2 <= op.radius ** 2
    result = mask.copy()
    if op.action is BrushAction.PAINT:
        result |= disk
    else:
        result &= ~disk
    return result


def morph(mask: np.ndarray, kind: MorphKind, radius: int) -> np.ndarray:
    """Open (erode then dilate) or close (dilate then erode), 4-neighborhood
    iterated ``radius`` times, outside-of-slice treated as background."""
    if radius < 1:
        raise ValueError(f"morph radius must be >= 1, got {radius}")
    result = mask.copy()
    first, second = (erode4, dilate4) if kind is MorphKind.OPEN else (dilate4, erode4)
    for _ in range(radius):
        result = first(result)
    for _ in range(radius):
        result = second(result)
    return result
