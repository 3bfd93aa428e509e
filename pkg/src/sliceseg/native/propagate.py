"""Slice-to-slice mask propagation for the built-in predictor.

One step carries a mask from a slice to its neighbor: the previous mask is
eroded once to bias seeds toward the object interior, the intensity band
is centered on the object's intensity (the previous slice sampled at those
seeds), and the region is regrown on the target slice. A target slice with
no pixels in the band yields an empty mask, which terminates the chain in
that direction.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimsMismatch
from .grow import GrowParams, erode4, region_grow


def propagate_step(prev_mask: np.ndarray, prev_values: np.ndarray,
                   next_values: np.ndarray, params: GrowParams) -> np.ndarray:
    if not (prev_mask.shape == prev_values.shape == next_values.shape):
        raise DimsMismatch(
            f"shapes differ: mask {prev_mask.shape}, prev {prev_values.shape}, "
            f"next {next_values.shape}"
        )
    if not prev_mask.any():
        return np.zeros_like(prev_mask, dtype=bool)

    seeds_mask = erode4(prev_mask)
    if not seeds_mask.any():
        seeds_mask = prev_mask  # erosion emptied a nonempty mask
    seed_coords = [tuple(rc) for rc in np.argwhere(seeds_mask)]

    mu = float(prev_values[seeds_mask].mean())
    span = float(next_values.max()) - float(next_values.min())
    tau = params.tolerance_fraction * span
    result = region_grow(next_values, seed_coords, mu, tau,
                         max_region_fraction=params.max_region_fraction)
    return result.mask
