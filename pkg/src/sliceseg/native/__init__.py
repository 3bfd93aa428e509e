from .grow import (
    GrowParams,
    GrowResult,
    apply_negatives,
    dilate4,
    erode4,
    estimate_band,
    region_grow,
)
from .predictor import NATIVE_ID, NativePredictor, NativeSequenceHandle, predict_grid
from .propagate import propagate_step

__all__ = [
    "GrowParams",
    "GrowResult",
    "NATIVE_ID",
    "NativePredictor",
    "NativeSequenceHandle",
    "apply_negatives",
    "dilate4",
    "erode4",
    "estimate_band",
    "predict_grid",
    "propagate_step",
    "region_grow",
]
