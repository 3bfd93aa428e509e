"""Registry of available predictors; the native one is always present."""

from __future__ import annotations

import logging

from ..errors import UnknownPredictor
from .base import ImagePredictor, PredictorDescriptor

log = logging.getLogger("sliceseg.predictor")


class PredictorRegistry:
    def __init__(self, native: ImagePredictor):
        self._predictors: dict[str, ImagePredictor] = {}
        self.register(native)

    def register(self, predictor: ImagePredictor) -> bool:
        """Add a predictor; duplicate ids are rejected and the first wins."""
        pid = predictor.descriptor.id
        if pid in self._predictors:
            log.warning("DUPLICATE_PREDICTOR_ID: %r already registered, keeping first", pid)
            return False
        self._predictors[pid] = predictor
        return True

    def descriptors(self) -> list[PredictorDescriptor]:
        return [p.descriptor for p in self._predictors.values()]

    def get(self, predictor_id: str) -> ImagePredictor:
        try:
            return self._predictors[predictor_id]
        except KeyError:
            raise UnknownPredictor(f"no predictor {predictor_id!r}") from None
