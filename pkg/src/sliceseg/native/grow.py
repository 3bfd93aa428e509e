"""Seeded region growing and binary-grid helpers for the built-in predictor.

Everything here is a pure function over 2D numpy grids with 4-connectivity
and the border-as-background convention, chosen so results are
bit-deterministic across runs and platforms.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, asdict

import numpy as np

from ..errors import NoPositiveSeeds

NEIGHBORS4 = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass(frozen=True)
class GrowParams:
    tolerance_fraction: float = 0.1
    max_region_fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.tolerance_fraction <= 1.0:
            raise ValueError(f"tolerance_fraction {self.tolerance_fraction} outside (0, 1]")
        if not 0.0 < self.max_region_fraction <= 1.0:
            raise ValueError(f"max_region_fraction {self.max_region_fraction} outside (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GrowResult:
    mask: np.ndarray          # bool (rows, cols)
    truncated: bool


def estimate_band(values: np.ndarray, positives: list[tuple[int, int]],
                  tolerance_fraction: float) -> tuple[float, float]:
    """(mu, tau): mean intensity at the positive points and the tolerance
    derived from the slice's own intensity span."""
    if not positives:
        raise NoPositiveSeeds("at least one positive point required")
    mu = float(np.mean([values[r, c] for r, c in positives]))
    tau = float(tolerance_fraction * (float(values.max()) - float(values.min())))
    return mu, tau


def region_grow(values: np.ndarray, seeds: list[tuple[int, int]],
                mu: float, tau: float, box: tuple[int, int, int, int] | None = None,
                max_region_fraction: float = 1.0) -> GrowResult:
    """Breadth-first growth over 4-connected pixels with intensity in
    [mu-tau, mu+tau].

    Seeds are visited in ascending (row, col); out-of-band seeds are skipped.
    The grown region is clipped to the inclusive box afterwards. If the
    region (pre-clip) would exceed max_region_fraction of the slice, growth
    halts and the partial region is returned flagged truncated.
    """
    rows, cols = values.shape
    lo, hi = mu - tau, mu + tau
    cap = int(np.floor(max_region_fraction * rows * cols))
    mask = np.zeros((rows, cols), dtype=bool)
    queue: deque[tuple[int, int]] = deque()
    count = 0
    truncated = False

    for r, c in sorted(set(seeds)):
        if mask[r, c] or not lo <= values[r, c] <= hi:
            continue
        if count >= cap:
            truncated = True
            break
        mask[r, c] = True
        count += 1
        queue.append((r, c))

    while queue and not truncated:
        r, c = queue.popleft()
        for dr, dc in NEIGHBORS4:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < rows and 0 <= nc < cols):
                continue
            if mask[nr, nc] or not lo <= values[nr, nc] <= hi:
                continue
            if count >= cap:
                truncated = True
                break
            mask[nr, nc] = True
            count += 1
            queue.append((nr, nc))

    if box is not None:
        r0, c0, r1, c1 = box
        clip = np.zeros_like(mask)
        clip[r0:r1 + 1, c0:c1 + 1] = True
        mask &= clip
    return GrowResult(mask=mask, truncated=truncated)


def apply_negatives(mask: np.ndarray, negatives: list[tuple[int, int]]) -> np.ndarray:
    """Remove every 4-connected component that contains a negative point."""
    result = mask.copy()
    rows, cols = result.shape
    for r, c in negatives:
        if not (0 <= r < rows and 0 <= c < cols) or not result[r, c]:
            continue
        queue = deque([(r, c)])
        result[r, c] = False
        while queue:
            cr, cc = queue.popleft()
            for dr, dc in NEIGHBORS4:
                nr, nc = cr + dr, cc + dc
                if 0 <= nr < rows and 0 <= nc < cols and result[nr, nc]:
                    result[nr, nc] = False
                    queue.append((nr, nc))
    return result


def erode4(mask: np.ndarray) -> np.ndarray:
    """One erosion step, 4-neighborhood, outside counts as background."""
    keep = mask.copy()
    keep[1:, :] &= mask[:-1, :]
    keep[:-1, :] &= mask[1:, :]
    keep[:, 1:] &= mask[:, :-1]
    keep[:, :-1] &= mask[:, 1:]
    # border pixels always erode: their outside neighbor is background
    keep[0, :] = False
    keep[-1, :] = False
    keep[:, 0] = False
    keep[:, -1] = False
    return keep


def erode4_inclusive(mask: np.ndarray) -> np.ndarray:
    """One erosion step where outside-of-slice counts as foreground.

    This is the erosion closing needs to stay extensive on a finite grid;
    dilation still clips at the border, so masks never grow past the image.
    """
    keep = mask.copy()
    keep[1:, :] &= mask[:-1, :]
    keep[:-1, :] &= mask[1:, :]
    keep[:, 1:] &= mask[:, :-1]
    keep[:, :-1] &= mask[:, 1:]
    return keep


def dilate4(mask: np.ndarray) -> np.ndarray:
    """One dilation step, 4-neighborhood, clipped at the slice border."""
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out
