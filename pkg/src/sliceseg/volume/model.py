"""Volume and slice data types.

Voxel data is kept flat in canonical order ``index = i + nx*(j + ny*k)``
(i fastest). All scalar math runs on float32 regardless of the file's
on-disk type.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..errors import IndexOutOfRange


class Axis(str, Enum):
    I = "I"
    J = "J"
    K = "K"


def num_slices(dims: tuple[int, int, int], axis: Axis) -> int:
    return dims[{"I": 0, "J": 1, "K": 2}[axis.value]]


def slice_dims(dims: tuple[int, int, int], axis: Axis) -> tuple[int, int]:
    """(rows, cols) of a slice: rows traverse the later remaining axis.

    K -> (ny, nx), J -> (nz, nx), I -> (nz, ny).
    """
    nx, ny, nz = dims
    if axis is Axis.K:
        return ny, nx
    if axis is Axis.J:
        return nz, nx
    return nz, ny


@dataclass(frozen=True)
class Volume:
    """Immutable 3D scalar grid with spacing and voxel-to-world affine."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    affine: np.ndarray          # 4x4 float64
    data: np.ndarray            # flat float32, canonical order
    intensity_range: tuple[float, float] = field(init=False)

    def __post_init__(self):
        nx, ny, nz = self.dims
        if min(nx, ny, nz) < 1:
            raise ValueError(f"dims must be >= 1, got {self.dims}")
        if self.data.shape != (nx * ny * nz,):
            raise ValueError(
                f"data length {self.data.shape} does not match dims {self.dims}"
            )
        if self.affine.shape != (4, 4):
            raise ValueError("affine must be 4x4")
        if abs(np.linalg.det(self.affine[:3, :3])) < 1e-12:
            raise ValueError("affine upper 3x3 is singular")
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(
            self, "intensity_range", (float(data.min()), float(data.max()))
        )

    @property
    def grid(self) -> np.ndarray:
        """View shaped (nz, ny, nx), indexed [k, j, i]."""
        nx, ny, nz = self.dims
        return self.data.reshape(nz, ny, nx)


@dataclass
class ScalarSlice:
    """One 2D plane of a volume, row-major float32."""

    axis: Axis
    index: int
    rows: int
    cols: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.rows, self.cols):
            raise ValueError("values shape does not match rows/cols")


@dataclass
class SliceImage:
    """8-bit rendering of a slice; the predictor's input surface."""

    rows: int
    cols: int
    pixels: np.ndarray          # uint8 (rows, cols)
    window: float
    level: float

    def __post_init__(self):
        if self.pixels.shape != (self.rows, self.cols):
            raise ValueError("pixels shape does not match rows/cols")
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be uint8")


def extract_slice(volume: Volume, axis: Axis, index: int) -> ScalarSlice:
    """Copy one plane out of the volume; the volume is never modified."""
    n = num_slices(volume.dims, axis)
    if not 0 <= index < n:
        raise IndexOutOfRange(f"slice {index} outside [0, {n}) along {axis.value}")
    grid = volume.grid
    if axis is Axis.K:
        values = grid[index, :, :]
    elif axis is Axis.J:
        values = grid[:, index, :]
    else:
        values = grid[:, :, index]
    rows, cols = slice_dims(volume.dims, axis)
    return ScalarSlice(axis=axis, index=index, rows=rows, cols=cols,
                       values=np.array(values, dtype=np.float32))


def content_digest(volume: Volume) -> str:
    """256-bit hex digest over dims and the canonical data bytes."""
    h = hashlib.sha256()
    h.update(struct.pack("<3i", *volume.dims))
    h.update(volume.data.astype("<f4").tobytes())
    return h.hexdigest()
