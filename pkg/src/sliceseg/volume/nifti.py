"""Minimal NIfTI-1 reader and writer (single-file ``.nii``, 348-byte header).

Only what the engine needs: 3D scalar volumes, the common integer/float
datatypes, scl_slope/scl_inter rescaling, sform/qform affines, and an
optional gzip container handled by the caller.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import MalformedHeader, TruncatedData, UnsupportedDatatype

HEADER_SIZE = 348
MAGIC = b"n+1\x00"
DATA_OFFSET = 352  # header + 4-byte extension flag

# datatype code -> numpy dtype (endianness applied separately)
_DTYPES = {
    2: "u1", 4: "i2", 8: "i4", 16: "f4", 64: "f8",
    256: "i1", 512: "u2", 768: "u4", 1024: "i8", 1280: "u8",
}
_UNSUPPORTED = {32, 128, 1536, 1792, 2048, 2304}  # complex, rgb, float128


def _quaternion_affine(hdr: dict) -> np.ndarray:
    b, c, d = hdr["quatern_b"], hdr["quatern_c"], hdr["quatern_d"]
    a2 = 1.0 - (b * b + c * c + d * d)
    a = np.sqrt(a2) if a2 > 0 else 0.0
    rot = np.array([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
    ])
    qfac = -1.0 if hdr["pixdim"][0] < 0 else 1.0
    sx, sy, sz = hdr["pixdim"][1], hdr["pixdim"][2], hdr["pixdim"][3] * qfac
    affine = np.eye(4)
    affine[:3, :3] = rot * np.array([sx, sy, sz])
    affine[:3, 3] = [hdr["qoffset_x"], hdr["qoffset_y"], hdr["qoffset_z"]]
    return affine


def parse(raw: bytes):
    """Parse a NIfTI-1 byte string -> (dims, spacing, affine, float32 data)."""
    if len(raw) < HEADER_SIZE:
        raise MalformedHeader("file shorter than the 348-byte header")
    sizeof_hdr = struct.unpack("<i", raw[0:4])[0]
    if sizeof_hdr == 348:
        endian = "<"
    elif struct.unpack(">i", raw[0:4])[0] == 348:
        endian = ">"
    else:
        raise MalformedHeader("sizeof_hdr is not 348 in either byte order")
    if raw[344:348] != MAGIC:
        raise MalformedHeader(f"bad magic {raw[344:348]!r}")

    dim = struct.unpack(f"{endian}8h", raw[40:56])
    datatype, bitpix = struct.unpack(f"{endian}2h", raw[70:74])
    pixdim = struct.unpack(f"{endian}8f", raw[76:108])
    vox_offset, scl_slope, scl_inter = struct.unpack(f"{endian}3f", raw[108:120])
    qform_code, sform_code = struct.unpack(f"{endian}2h", raw[252:256])
    quatern = struct.unpack(f"{endian}6f", raw[256:280])
    srow = struct.unpack(f"{endian}12f", raw[280:328])

    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise MalformedHeader(f"dim[0] = {ndim} outside [1, 7]")
    shape = [max(1, dim[i]) for i in range(1, ndim + 1)]
    if any(d != 1 for d in shape[3:]):
        raise UnsupportedDatatype("4D (time-series) volumes are not supported")
    shape = (shape + [1, 1, 1])[:3]
    if any(d < 1 for d in shape):
        raise MalformedHeader(f"non-positive dims {shape}")

    if datatype in _UNSUPPORTED:
        raise UnsupportedDatatype(f"datatype code {datatype}")
    if datatype not in _DTYPES:
        raise UnsupportedDatatype(f"unknown datatype code {datatype}")
    dtype = np.dtype(endian + _DTYPES[datatype])

    offset = int(vox_offset) if vox_offset >= HEADER_SIZE else DATA_OFFSET
    nvox = shape[0] * shape[1] * shape[2]
    need = nvox * dtype.itemsize
    if len(raw) < offset + need:
        raise TruncatedData(
            f"need {need} data bytes at offset {offset}, file has {len(raw)}"
        )
    data = np.frombuffer(raw, dtype=dtype, count=nvox, offset=offset)
    data = data.astype(np.float32)
    if scl_slope != 0.0:
        data = data * np.float32(scl_slope) + np.float32(scl_inter)

    spacing = tuple(abs(float(pixdim[i])) or 1.0 for i in (1, 2, 3))
    if sform_code > 0:
        affine = np.eye(4)
        affine[0, :] = srow[0:4]
        affine[1, :] = srow[4:8]
        affine[2, :] = srow[8:12]
    elif qform_code > 0:
        hdr = {
            "pixdim": pixdim,
            "quatern_b": quatern[0], "quatern_c": quatern[1], "quatern_d": quatern[2],
            "qoffset_x": quatern[3], "qoffset_y": quatern[4], "qoffset_z": quatern[5],
        }
        affine = _quaternion_affine(hdr)
    else:
        affine = np.diag([spacing[0], spacing[1], spacing[2], 1.0])
    return tuple(shape), spacing, affine, data


def write(dims: tuple[int, int, int], spacing: tuple[float, float, float],
          affine: np.ndarray, data: np.ndarray) -> bytes:
    """Serialize a 3D uint16 labelmap (or any uint16 grid) as NIfTI-1."""
    data = np.ascontiguousarray(data, dtype="<u2")
    hdr = bytearray(HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, HEADER_SIZE)
    struct.pack_into("<8h", hdr, 40, 3, dims[0], dims[1], dims[2], 1, 1, 1, 1)
    struct.pack_into("<2h", hdr, 70, 512, 16)  # uint16
    struct.pack_into("<8f", hdr, 76, 1.0, spacing[0], spacing[1], spacing[2],
                     0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<3f", hdr, 108, float(DATA_OFFSET), 1.0, 0.0)
    struct.pack_into("<2h", hdr, 252, 0, 1)  # qform off, sform on
    struct.pack_into("<12f", hdr, 280,
                     *affine[0, :].tolist(), *affine[1, :].tolist(),
                     *affine[2, :].tolist())
    hdr[344:348] = MAGIC
    return bytes(hdr) + b"\x00\x00\x00\x00" + data.tobytes()
