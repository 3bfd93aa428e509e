"""Binary per-slice masks, run-length transport encoding, and comparison."""

from __future__ import annotations

import numpy as np

from ..errors import DimsMismatch, RunSumMismatch


class MaskSlice:
    """Immutable binary mask over one slice, row-major."""

    __slots__ = ("rows", "cols", "bits")

    def __init__(self, rows: int, cols: int, bits: np.ndarray):
        if bits.shape != (rows, cols):
            raise DimsMismatch(f"bits shape {bits.shape} != ({rows}, {cols})")
        bits = np.ascontiguousarray(bits, dtype=bool)
        bits.setflags(write=False)
        self.rows = rows
        self.cols = cols
        self.bits = bits

    @classmethod
    def empty(cls, rows: int, cols: int) -> "MaskSlice":
        return cls(rows, cols, np.zeros((rows, cols), dtype=bool))

    @classmethod
    def from_array(cls, bits: np.ndarray) -> "MaskSlice":
        return cls(bits.shape[0], bits.shape[1], bits)

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    @property
    def is_empty(self) -> bool:
        return not self.bits.any()

    def __eq__(self, other) -> bool:
        if not isinstance(other, MaskSlice):
            return NotImplemented
        return (self.rows == other.rows and self.cols == other.cols
                and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.rows, self.cols, self.bits.tobytes()))

    def __repr__(self):
        return f"MaskSlice({self.rows}x{self.cols}, {self.count} set)"


def rle_encode(mask: MaskSlice) -> list[int]:
    """Alternating run counts, zeros first, row-major."""
    flat = mask.bits.reshape(-1)
    if flat.size == 0:
        return []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return [int(r) for r in runs]


def rle_decode(runs: list[int], rows: int, cols: int) -> MaskSlice:
    """Inverse of rle_encode; the runs must sum to rows*cols."""
    if any((not isinstance(r, (int, np.integer))) or r < 0 for r in runs):
        raise RunSumMismatch("runs must be non-negative integers")
    total = sum(runs)
    if total != rows * cols:
        raise RunSumMismatch(f"runs sum to {total}, expected {rows * cols}")
    flat = np.zeros(rows * cols, dtype=bool)
    pos = 0
    value = False
    for run in runs:
        if value:
            flat[pos:pos + run] = True
        pos += run
        value = not value
    return MaskSlice(rows, cols, flat.reshape(rows, cols))


def dice(a, b) -> float:
    """2|A∩B| / (|A|+|B|); 1.0 when both sides are empty."""
    bits_a = a.bits if isinstance(a, MaskSlice) else np.asarray(a, dtype=bool)
    bits_b = b.bits if isinstance(b, MaskSlice) else np.asarray(b, dtype=bool)
    if bits_a.shape != bits_b.shape:
        raise DimsMismatch(f"shape {bits_a.shape} != {bits_b.shape}")
    size_a = int(bits_a.sum())
    size_b = int(bits_b.sum())
    if size_a + size_b == 0:
        return 1.0
    overlap = int(np.logical_and(bits_a, bits_b).sum())
    return 2.0 * overlap / (size_a + size_b)
