"""Assembly of per-slice masks into a dense multi-label volume."""

from __future__ import annotations

import numpy as np

from ..errors import DimsMismatch
from ..volume.model import Axis, num_slices, slice_dims
from .mask import MaskSlice

MAX_LABEL = 65535


class SegmentationVolume:
    """Per-label maps of slice masks along one axis, exportable densely.

    On overlap in the dense export, the lowest label id wins.
    """

    def __init__(self, dims: tuple[int, int, int], axis: Axis):
        self.dims = dims
        self.axis = axis
        self.labels: dict[int, dict[int, MaskSlice]] = {}

    def merge_mask(self, label_id: int, slice_index: int, mask: MaskSlice):
        """Replace one label's mask on one slice; empty masks remove it."""
        if not 1 <= label_id <= MAX_LABEL:
            raise ValueError(f"label_id {label_id} outside [1, {MAX_LABEL}]")
        if not 0 <= slice_index < num_slices(self.dims, self.axis):
            raise DimsMismatch(f"slice {slice_index} outside the {self.axis.value} range")
        rows, cols = slice_dims(self.dims, self.axis)
        if (mask.rows, mask.cols) != (rows, cols):
            raise DimsMismatch(
                f"mask {mask.rows}x{mask.cols} does not fit {rows}x{cols} slices"
            )
        per_label = self.labels.setdefault(label_id, {})
        if mask.is_empty:
            per_label.pop(slice_index, None)
            if not per_label:
                self.labels.pop(label_id, None)
        else:
            per_label[slice_index] = mask

    def to_dense(self) -> np.ndarray:
        """Flat uint16 labelmap in canonical order."""
        nx, ny, nz = self.dims
        grid = np.zeros((nz, ny, nx), dtype=np.uint16)
        # higher labels first so lower ids overwrite on overlap
        for label_id in sorted(self.labels, reverse=True):
            for slice_index, mask in self.labels[label_id].items():
                view = self._slice_view(grid, slice_index)
                view[mask.bits] = label_id
        return grid.reshape(-1)

    def _slice_view(self, grid: np.ndarray, index: int) -> np.ndarray:
        if self.axis is Axis.K:
            return grid[index, :, :]
        if self.axis is Axis.J:
            return grid[:, index, :]
        return grid[:, :, index]
