"""Window/level rendering of scalar slices to 8-bit images."""

from __future__ import annotations

import numpy as np

from ..errors import NonPositiveWindow
from .model import ScalarSlice, SliceImage


def render_slice(s: ScalarSlice, window: float, level: float) -> SliceImage:
    """Map scalars to [0, 255]: ``(v - (level - window/2)) / window * 255``,
    rounded half away from zero, then clamped.
    """
    if window <= 0:
        raise NonPositiveWindow(f"window must be > 0, got {window}")
    lo = level - window / 2.0
    scaled = (s.values.astype(np.float64) - lo) / window * 255.0
    rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    pixels = np.clip(rounded, 0, 255).astype(np.uint8)
    return SliceImage(rows=s.rows, cols=s.cols, pixels=pixels,
                      window=float(window), level=float(level))


def default_window_level(intensity_range: tuple[float, float]) -> tuple[float, float] | None:
    """Full-range window; None when the data is constant (degenerate)."""
    lo, hi = intensity_range
    if hi <= lo:
        return None
    return hi - lo, (hi + lo) / 2.0


def render_with_defaults(
    s: ScalarSlice,
    intensity_range: tuple[float, float],
    window: float | None = None,
    level: float | None = None,
) -> SliceImage:
    """Render with explicit window/level, falling back to the full intensity
    range. A constant range renders uniformly to 0.
    """
    if window is not None and level is not None:
        return render_slice(s, window, level)
    wl = default_window_level(intensity_range)
    if wl is None:
        # constant data: pick a window/level pair that maps everything to 0
        value = float(intensity_range[0])
        return render_slice(s, 1.0, value + 1.0)
    return render_slice(s, wl[0], wl[1])
