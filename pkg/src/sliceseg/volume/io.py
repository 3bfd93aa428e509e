"""Load volumes (NIfTI-1 / NRRD, gzip accepted) and export labelmaps."""

from __future__ import annotations

import gzip
from typing import BinaryIO

import numpy as np

from ..errors import DimsMismatch, MalformedHeader
from . import nifti, nrrd
from .model import Volume

GZIP_MAGIC = b"\x1f\x8b"


def _as_bytes(source: bytes | BinaryIO) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    return source.read()


def detect_format(raw: bytes) -> str:
    """'nifti1' or 'nrrd' by magic; gzip containers are peeked into."""
    if raw[:2] == GZIP_MAGIC:
        try:
            raw = gzip.decompress(raw)
        except OSError as exc:
            raise MalformedHeader(f"gzip container failed to decode: {exc}") from exc
    if raw[:4] == b"NRRD":
        return "nrrd"
    if len(raw) >= 348 and raw[344:348] == nifti.MAGIC:
        return "nifti1"
    raise MalformedHeader("magic matches neither NIfTI-1 nor NRRD")


def load_volume(source: bytes | BinaryIO, format: str = "auto") -> Volume:
    """Parse a complete NIfTI-1 or NRRD file into a Volume."""
    raw = _as_bytes(source)
    if format == "auto":
        format = detect_format(raw)
    if format == "nifti1":
        if raw[:2] == GZIP_MAGIC:
            try:
                raw = gzip.decompress(raw)
            except OSError as exc:
                raise MalformedHeader(f"gzip container failed to decode: {exc}") from exc
        dims, spacing, affine, data = nifti.parse(raw)
    elif format == "nrrd":
        dims, spacing, affine, data = nrrd.parse(raw)
    else:
        raise ValueError(f"unknown format {format!r}")
    return Volume(dims=dims, spacing=spacing, affine=affine, data=data)


def save_labelmap(labels: np.ndarray, meta: Volume, format: str = "nrrd") -> bytes:
    """Serialize a flat uint16 labelmap carrying the source geometry.

    ``labels`` is in canonical order and must match ``meta.dims``;
    ``load_volume`` on the output reproduces the labels voxel for voxel.
    """
    nvox = meta.dims[0] * meta.dims[1] * meta.dims[2]
    if labels.size != nvox:
        raise DimsMismatch(f"labelmap has {labels.size} voxels, volume {nvox}")
    labels = labels.reshape(nvox)
    if format == "nrrd":
        return nrrd.write(meta.dims, meta.spacing, meta.affine, labels)
    if format in ("nifti", "nifti1"):
        return nifti.write(meta.dims, meta.spacing, meta.affine, labels)
    raise ValueError(f"unknown labelmap format {format!r}")


def format_for_path(path: str) -> str:
    lower = path.lower()
    if lower.endswith((".nii", ".nii.gz")):
        return "nifti"
    return "nrrd"
