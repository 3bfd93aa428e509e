"""Minimal NRRD reader and writer (attached data, raw or gzip encoding).

The header is plain text up to the first blank line; the first listed axis
varies fastest in the data stream, which matches the engine's canonical
voxel order directly.
"""

from __future__ import annotations

import gzip
import re
import zlib

import numpy as np

from ..errors import MalformedHeader, TruncatedData, UnsupportedDatatype

MAGIC_RE = re.compile(rb"^NRRD000[1-5]$")

_TYPE_ALIASES = {
    "signed char": "i1", "int8": "i1", "int8_t": "i1",
    "uchar": "u1", "unsigned char": "u1", "uint8": "u1", "uint8_t": "u1",
    "short": "i2", "short int": "i2", "signed short": "i2", "int16": "i2", "int16_t": "i2",
    "ushort": "u2", "unsigned short": "u2", "uint16": "u2", "uint16_t": "u2",
    "int": "i4", "signed int": "i4", "int32": "i4", "int32_t": "i4",
    "uint": "u4", "unsigned int": "u4", "uint32": "u4", "uint32_t": "u4",
    "longlong": "i8", "long long": "i8", "int64": "i8", "int64_t": "i8",
    "ulonglong": "u8", "unsigned long long": "u8", "uint64": "u8", "uint64_t": "u8",
    "float": "f4", "double": "f8",
}


def _parse_vector(text: str) -> list[float]:
    return [float(x) for x in text.strip().lstrip("(").rstrip(")").split(",")]


def parse(raw: bytes):
    """Parse an NRRD byte string -> (dims, spacing, affine, float32 data)."""
    nl = raw.find(b"\n")
    if nl < 0:
        raise MalformedHeader("no newline after NRRD magic")
    if not MAGIC_RE.match(raw[:nl].rstrip(b"\r")):
        raise MalformedHeader(f"bad NRRD magic {raw[:nl][:12]!r}")

    fields: dict[str, str] = {}
    pos = nl + 1
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise MalformedHeader("header not terminated by a blank line")
        line = raw[pos:nl].rstrip(b"\r")
        pos = nl + 1
        if line == b"":
            break
        if line.startswith(b"#"):
            continue
        try:
            text = line.decode("ascii")
        except UnicodeDecodeError as exc:
            raise MalformedHeader(f"non-ascii header line: {line[:40]!r}") from exc
        if ":=" in text:
            continue  # key-value metadata, irrelevant here
        if ": " not in text and not text.endswith(":"):
            raise MalformedHeader(f"malformed header line: {text[:60]}")
        name, _, value = text.partition(":")
        fields[name.strip().lower()] = value.strip()

    for required in ("type", "dimension", "sizes", "encoding"):
        if required not in fields:
            raise MalformedHeader(f"missing required field '{required}'")

    if int(fields["dimension"]) != 3:
        raise UnsupportedDatatype(f"dimension {fields['dimension']}, expected 3")
    sizes = [int(s) for s in fields["sizes"].split()]
    if len(sizes) != 3 or any(s < 1 for s in sizes):
        raise MalformedHeader(f"bad sizes {fields['sizes']!r}")

    type_name = fields["type"].lower()
    if type_name not in _TYPE_ALIASES:
        if "complex" in type_name or type_name == "block":
            raise UnsupportedDatatype(f"type {type_name!r}")
        raise UnsupportedDatatype(f"unknown type {type_name!r}")
    endian = ">" if fields.get("endian", "little") == "big" else "<"
    dtype = np.dtype(endian + _TYPE_ALIASES[type_name])

    encoding = fields["encoding"].lower()
    payload = raw[pos:]
    if encoding == "raw":
        blob = payload
    elif encoding in ("gzip", "gz"):
        try:
            blob = gzip.decompress(payload)
        except (OSError, EOFError, zlib.error) as exc:
            raise TruncatedData(f"gzip payload failed to decode: {exc}") from exc
    else:
        raise UnsupportedDatatype(f"encoding {encoding!r}")

    nvox = sizes[0] * sizes[1] * sizes[2]
    need = nvox * dtype.itemsize
    if len(blob) < need:
        raise TruncatedData(f"need {need} data bytes, got {len(blob)}")
    data = np.frombuffer(blob, dtype=dtype, count=nvox).astype(np.float32)

    affine = np.eye(4)
    spacing = [1.0, 1.0, 1.0]
    if "space directions" in fields:
        vectors = re.findall(r"\(([^)]*)\)|none", fields["space directions"])
        cols = []
        for v in vectors:
            if v:
                cols.append(_parse_vector(f"({v})"))
        if len(cols) != 3:
            raise MalformedHeader(
                f"space directions needs 3 vectors: {fields['space directions']!r}"
            )
        affine[:3, :3] = np.array(cols).T
        spacing = [float(np.linalg.norm(c)) for c in cols]
    elif "spacings" in fields:
        spacing = [float(s) for s in fields["spacings"].split()[:3]]
        affine[:3, :3] = np.diag(spacing)
    if "space origin" in fields:
        affine[:3, 3] = _parse_vector(fields["space origin"])
    return tuple(sizes), tuple(spacing), affine, data


def write(dims: tuple[int, int, int], spacing: tuple[float, float, float],
          affine: np.ndarray, data: np.ndarray, encoding: str = "gzip") -> bytes:
    """Serialize a 3D uint16 grid as NRRD with space directions/origin."""
    data = np.ascontiguousarray(data, dtype="<u2")
    directions = " ".join(
        "(" + ",".join(repr(float(affine[r, c])) for r in range(3)) + ")"
        for c in range(3)
    )
    origin = "(" + ",".join(repr(float(affine[r, 3])) for r in range(3)) + ")"
    header = (
        "NRRD0004\n"
        "# sliceseg labelmap\n"
        "type: unsigned short\n"
        "dimension: 3\n"
        "space: right-anterior-superior\n"
        f"sizes: {dims[0]} {dims[1]} {dims[2]}\n"
        f"space directions: {directions}\n"
        "kinds: domain domain domain\n"
        "endian: little\n"
        f"encoding: {encoding}\n"
        f"space origin: {origin}\n"
        "\n"
    ).encode("ascii")
    raw = data.tobytes()
    if encoding == "gzip":
        payload = gzip.compress(raw, 9, mtime=0)  # mtime pinned for determinism
    elif encoding == "raw":
        payload = raw
    else:
        raise UnsupportedDatatype(f"encoding {encoding!r}")
    return header + payload
