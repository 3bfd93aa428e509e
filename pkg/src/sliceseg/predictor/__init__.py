from .base import (
    Capabilities,
    DIRECTIONS,
    ImagePredictor,
    PredictorDescriptor,
    SequenceHandle,
)
from .bridge import (
    BridgeClient,
    BridgePredictor,
    BridgeSequenceHandle,
    PROTOCOL_VERSION,
    probe_bridge,
)
from .cache import CacheStats, DEFAULT_BUDGET, EmbeddingCache, EmbeddingKey
from .registry import PredictorRegistry

__all__ = [
    "BridgeClient",
    "BridgePredictor",
    "BridgeSequenceHandle",
    "CacheStats",
    "Capabilities",
    "DEFAULT_BUDGET",
    "DIRECTIONS",
    "EmbeddingCache",
    "EmbeddingKey",
    "ImagePredictor",
    "PROTOCOL_VERSION",
    "PredictorDescriptor",
    "PredictorRegistry",
    "SequenceHandle",
]
