"""Predictor abstraction: promptable 2D prediction plus sequence propagation.

A predictor encodes a rendered slice once into an opaque embedding blob and
then decodes prompt-conditioned masks from it; sequence-capable predictors
additionally propagate masks across an ordered run of frames.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterator

from ..annotation.mask import MaskSlice
from ..annotation.prompts import PromptSet
from ..errors import SequenceUnsupported
from ..volume.model import SliceImage

FAMILIES = ("native", "sam-image", "sam2-image", "sam2-video")
SEQUENCE_FAMILIES = ("native", "sam2-video")
DIRECTIONS = ("both", "left", "right")


@dataclass(frozen=True)
class Capabilities:
    supports_box: bool
    supports_sequence: bool
    supports_negative_points: bool


@dataclass(frozen=True)
class PredictorDescriptor:
    id: str
    family: str
    variant: str
    capabilities: Capabilities

    def __post_init__(self):
        if not self.id:
            raise ValueError("predictor id must be non-empty")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.capabilities.supports_sequence and self.family not in SEQUENCE_FAMILIES:
            raise ValueError(
                f"family {self.family!r} cannot advertise sequence support"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "family": self.family,
            "variant": self.variant,
            "capabilities": {
                "supports_box": self.capabilities.supports_box,
                "supports_sequence": self.capabilities.supports_sequence,
                "supports_negative_points": self.capabilities.supports_negative_points,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PredictorDescriptor":
        caps = payload["capabilities"]
        return cls(
            id=payload["id"],
            family=payload["family"],
            variant=payload.get("variant", "n/a"),
            capabilities=Capabilities(
                supports_box=bool(caps["supports_box"]),
                supports_sequence=bool(caps["supports_sequence"]),
                supports_negative_points=bool(caps["supports_negative_points"]),
            ),
        )


class SequenceHandle(ABC):
    """Predictor-side context holding loaded frames and prompt state."""

    @abstractmethod
    def add_prompts(self, position: int, prompts: PromptSet) -> None: ...

    @abstractmethod
    def run(self, direction: str) -> Iterator[tuple[int, MaskSlice]]:
        """Yield one mask per target frame, nearest prompted frame first."""

    @abstractmethod
    def reset(self) -> None:
        """Clear all prompt state while keeping the frames loaded."""

    def close(self) -> None:
        pass


class ImagePredictor(ABC):
    descriptor: PredictorDescriptor

    @abstractmethod
    def encode(self, img: SliceImage) -> bytes:
        """Compute the per-slice embedding blob (cache-friendly)."""

    @abstractmethod
    def predict(self, blob: bytes, prompts: PromptSet) -> MaskSlice:
        """Decode a prompt-conditioned binary mask from an embedding blob."""

    def open_sequence(self, frames: list[SliceImage]) -> SequenceHandle:
        raise SequenceUnsupported(
            f"predictor {self.descriptor.id!r} has no sequence support"
        )
