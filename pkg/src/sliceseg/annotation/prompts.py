"""Point and box prompts in slice pixel coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from ..errors import InvalidPromptSet, OutOfBounds


class Polarity(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class PointPrompt:
    row: int
    col: int
    polarity: Polarity = Polarity.POSITIVE


@dataclass(frozen=True)
class BoxPrompt:
    """Inclusive pixel-coordinate box with r0 < r1 and c0 < c1."""

    r0: int
    c0: int
    r1: int
    c1: int

    def __post_init__(self):
        if not (self.r0 < self.r1 and self.c0 < self.c1):
            raise OutOfBounds(
                f"degenerate box ({self.r0},{self.c0})-({self.r1},{self.c1})"
            )


@dataclass(frozen=True)
class PromptSet:
    """All prompts on one slice; its presence makes the slice conditional."""

    slice_index: int
    points: tuple[PointPrompt, ...] = ()
    box: BoxPrompt | None = None

    @property
    def positives(self) -> tuple[PointPrompt, ...]:
        return tuple(p for p in self.points if p.polarity is Polarity.POSITIVE)

    @property
    def negatives(self) -> tuple[PointPrompt, ...]:
        return tuple(p for p in self.points if p.polarity is Polarity.NEGATIVE)

    @property
    def can_seed(self) -> bool:
        return bool(self.positives) or self.box is not None

    def require_seedable(self):
        if not self.can_seed:
            raise InvalidPromptSet(
                "prompt set needs at least one positive point or a box"
            )

    def with_point(self, point: PointPrompt) -> "PromptSet":
        return replace(self, points=self.points + (point,))

    def with_box(self, box: BoxPrompt) -> "PromptSet":
        return replace(self, box=box)

    def validate_bounds(self, rows: int, cols: int):
        for p in self.points:
            if not (0 <= p.row < rows and 0 <= p.col < cols):
                raise OutOfBounds(
                    f"point ({p.row},{p.col}) outside {rows}x{cols} slice"
                )
        if self.box is not None:
            b = self.box
            if not (0 <= b.r0 and b.r1 < rows and 0 <= b.c0 and b.c1 < cols):
                raise OutOfBounds(
                    f"box ({b.r0},{b.c0})-({b.r1},{b.c1}) outside {rows}x{cols} slice"
                )
