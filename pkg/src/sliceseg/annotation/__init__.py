from .mask import MaskSlice, dice, rle_decode, rle_encode
from .prompts import BoxPrompt, PointPrompt, Polarity, PromptSet
from .segvolume import SegmentationVolume
from .session import ConditionalSlice, Session, UNDO_DEPTH

__all__ = [
    "BoxPrompt",
    "ConditionalSlice",
    "MaskSlice",
    "PointPrompt",
    "Polarity",
    "PromptSet",
    "SegmentationVolume",
    "Session",
    "UNDO_DEPTH",
    "dice",
    "rle_decode",
    "rle_encode",
]
