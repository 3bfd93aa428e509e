from .model import (
    Axis,
    ScalarSlice,
    SliceImage,
    Volume,
    content_digest,
    extract_slice,
    num_slices,
    slice_dims,
)
from .io import detect_format, format_for_path, load_volume, save_labelmap
from .render import default_window_level, render_slice, render_with_defaults

__all__ = [
    "Axis",
    "ScalarSlice",
    "SliceImage",
    "Volume",
    "content_digest",
    "default_window_level",
    "detect_format",
    "extract_slice",
    "format_for_path",
    "load_volume",
    "num_slices",
    "render_slice",
    "render_with_defaults",
    "save_labelmap",
    "slice_dims",
]
