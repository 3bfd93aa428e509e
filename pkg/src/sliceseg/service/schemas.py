"""Request/response models for the HTTP surface."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class VolumeInfo(BaseModel):
    volume_id: str
    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    intensity_range: tuple[float, float]


class CapabilitiesOut(BaseModel):
    supports_box: bool
    supports_sequence: bool
    supports_negative_points: bool


class PredictorInfo(BaseModel):
    id: str
    family: str
    variant: str
    capabilities: CapabilitiesOut


class SessionCreate(BaseModel):
    volume_id: str
    axis: Literal["I", "J", "K"] = "K"
    label: int = Field(default=1, ge=1, le=65535)
    predictor_id: str = "native"


class SessionCreated(BaseModel):
    session_id: str


class PointIn(BaseModel):
    row: int
    col: int
    polarity: Literal["positive", "negative"] = "positive"


class BoxIn(BaseModel):
    r0: int
    c0: int
    r1: int
    c1: int


class PromptRequest(BaseModel):
    slice: int
    points: list[PointIn] = Field(default_factory=list)
    box: BoxIn | None = None


class MaskResponse(BaseModel):
    mask_rle: list[int]
    rows: int
    cols: int


class PropagateRequest(BaseModel):
    mode: Literal["all", "left", "right"]
    from_slice: int | None = None


class JobCreated(BaseModel):
    job_id: str


class JobInfo(BaseModel):
    job_id: str
    session_id: str
    mode: str
    from_slice: int | None
    state: str
    slices_done: int
    slices_total: int
    error: str | None
    warnings: list[str]


class RefineRequest(BaseModel):
    """Brush op (center+action) or morphological op (morph kind), one of."""

    slice: int
    center: tuple[int, int] | None = None
    radius: float = Field(default=1, ge=0)
    action: Literal["paint", "erase"] | None = None
    morph: Literal["open", "close"] | None = None


class RevisionResponse(BaseModel):
    revision: int


class ConditionalOut(BaseModel):
    slice: int
    points: list[PointIn]
    box: BoxIn | None
    mask_rle: list[int] | None


class PropagatedOut(BaseModel):
    slice: int
    mask_rle: list[int]


class SessionDetail(BaseModel):
    session_id: str
    volume_id: str
    axis: str
    label: int
    predictor_id: str
    revision: int
    rows: int
    cols: int
    n_slices: int
    window: float
    level: float
    conditional: list[ConditionalOut]
    propagated: list[PropagatedOut]
    edited: list[int]


class ErrorBody(BaseModel):
    code: str
    message: str


class ErrorEnvelope(BaseModel):
    error: ErrorBody
