"""Reader/writer for a minimal NRRD subset (raw, little-endian, attached data).

Volumes are held as float64 arrays indexed ``data[i, j, k]`` (x, y, z).  On
disk the payload is x-fastest, which is numpy's Fortran order for that
indexing.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

_NRRD_TYPES = {
    "uchar": np.dtype("<u1"),
    "short": np.dtype("<i2"),
    "ushort": np.dtype("<u2"),
    "int": np.dtype("<i4"),
    "float": np.dtype("<f4"),
    "double": np.dtype("<f8"),
}
# common spellings accepted by other NRRD writers
_TYPE_ALIASES = {
    "unsigned char": "uchar", "uint8": "uchar", "uint8_t": "uchar",
    "signed short": "short", "short int": "short", "int16": "short", "int16_t": "short",
    "unsigned short": "ushort", "uint16": "ushort", "uint16_t": "ushort",
    "signed int": "int", "int32": "int", "int32_t": "int",
}
_INTEGER_TYPES = {"uchar", "short", "ushort", "int"}
_REQUIRED_KEYS = ("dimension", "sizes", "type", "encoding")
SPACING_RTOL = 1e-4


class VolumeIOError(ValueError):
    """Base class for volume reading and geometry errors."""


class MissingHeaderKey(VolumeIOError):
    pass


class UnsupportedEncoding(VolumeIOError):
    pass


class UnsupportedType(VolumeIOError):
    pass


class PayloadSizeMismatch(VolumeIOError):
    pass


class NonFiniteIntensity(VolumeIOError):
    pass


class NonIntegerMaskType(VolumeIOError):
    pass


class MalformedHeader(VolumeIOError):
    pass


class DimsMismatch(VolumeIOError):
    pass


class SpacingMismatch(VolumeIOError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Volume:
    """Scalar image on a regular grid with physical spacing in mm."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    data: np.ndarray

    def __post_init__(self):
        _normalize_geometry(self)
        _check_geometry(self.dims, self.spacing, self.data)
        data = np.asarray(self.data, dtype=np.float64)
        if not np.all(np.isfinite(data)):
            raise NonFiniteIntensity("volume contains NaN or infinite intensities")
        object.__setattr__(self, "data", _frozen(_as_grid(data, self.dims)))

    @property
    def voxel_volume(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz


@dataclass(frozen=True, eq=False)
class MaskVolume:
    """Integer label grid sharing a Volume's geometry."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    labels: np.ndarray

    def __post_init__(self):
        _normalize_geometry(self)
        _check_geometry(self.dims, self.spacing, self.labels)
        labels = np.asarray(self.labels)
        if not np.issubdtype(labels.dtype, np.integer):
            raise NonIntegerMaskType(f"mask labels must be integers, got {labels.dtype}")
        if labels.size and labels.min() < 0:
            raise VolumeIOError("mask labels must be non-negative")
        object.__setattr__(self, "labels", _frozen(_as_grid(labels.astype(np.int64), self.dims)))


def _normalize_geometry(vol) -> None:
    object.__setattr__(vol, "dims", tuple(int(d) for d in vol.dims))
    object.__setattr__(vol, "spacing", tuple(float(s) for s in vol.spacing))


def _check_geometry(dims, spacing, data):
    if len(dims) != 3 or any(int(d) != d or d < 1 for d in dims):
        raise VolumeIOError(f"dims must be three positive integers, got {dims}")
    if len(spacing) != 3 or not all(math.isfinite(s) and s > 0 for s in spacing):
        raise VolumeIOError(f"spacing must be three positive numbers, got {spacing}")
    if np.asarray(data).size != dims[0] * dims[1] * dims[2]:
        raise PayloadSizeMismatch(
            f"data has {np.asarray(data).size} values, dims {dims} need {dims[0] * dims[1] * dims[2]}"
        )


def _as_grid(values: np.ndarray, dims) -> np.ndarray:
    # flat input is taken as x-fastest
    if values.ndim == 1:
        return values.reshape(dims, order="F")
    if values.shape != tuple(dims):
        raise PayloadSizeMismatch(f"data shape {values.shape} does not match dims {tuple(dims)}")
    return values


def _parse_header(raw: bytes, path) -> tuple[dict[str, str], bytes]:
    first_nl = raw.find(b"\n")
    magic = raw[:first_nl].strip() if first_nl >= 0 else raw.strip()
    if not (len(magic) == 8 and magic.startswith(b"NRRD000") and magic[7:8] in b"12345"):
        raise MalformedHeader(f"{path}: not an NRRD file (magic {magic[:16]!r})")

    fields: dict[str, str] = {}
    pos = first_nl + 1
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise MalformedHeader(f"{path}: header is not terminated by a blank line")
        line = raw[pos:nl].decode("ascii", errors="replace").rstrip("\r")
        pos = nl + 1
        if line == "":
            break
        if line.startswith("#") or ":=" in line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise MalformedHeader(f"{path}: bad header line {line!r}")
        fields[key.strip().lower()] = value.strip()
    return fields, raw[pos:]


def _read_nrrd(path) -> tuple[tuple[int, int, int], tuple[float, float, float], np.ndarray, str]:
    raw = Path(path).read_bytes()
    fields, payload = _parse_header(raw, path)
    for key in _REQUIRED_KEYS:
        if key not in fields:
            raise MissingHeaderKey(f"{path}: header lacks required key {key!r}")

    if fields["encoding"].lower() != "raw":
        raise UnsupportedEncoding(f"{path}: encoding {fields['encoding']!r} (only raw is supported)")
    if fields.get("endian", "little").lower() != "little":
        raise UnsupportedEncoding(f"{path}: only little-endian payloads are supported")
    if "data file" in fields or "datafile" in fields:
        raise UnsupportedEncoding(f"{path}: detached data files are not supported")

    type_name = fields["type"].lower()
    type_name = _TYPE_ALIASES.get(type_name, type_name)
    if type_name not in _NRRD_TYPES:
        raise UnsupportedType(f"{path}: voxel type {fields['type']!r}")

    try:
        ndim = int(fields["dimension"])
        sizes = [int(s) for s in fields["sizes"].split()]
    except ValueError as exc:
        raise MalformedHeader(f"{path}: {exc}") from exc
    if ndim not in (2, 3) or len(sizes) != ndim or min(sizes) < 1:
        raise MalformedHeader(f"{path}: dimension {ndim} with sizes {sizes}")

    if "spacings" in fields:
        try:
            spacing = [float(s) for s in fields["spacings"].split()]
        except ValueError as exc:
            raise MalformedHeader(f"{path}: {exc}") from exc
        if len(spacing) != ndim:
            raise MalformedHeader(f"{path}: {len(spacing)} spacings for dimension {ndim}")
    else:
        spacing = [1.0] * ndim

    if ndim == 2:
        sizes.append(1)
        spacing.append(1.0)
    dims = (sizes[0], sizes[1], sizes[2])

    dtype = _NRRD_TYPES[type_name]
    expected = dims[0] * dims[1] * dims[2] * dtype.itemsize
    if len(payload) != expected:
        raise PayloadSizeMismatch(f"{path}: payload is {len(payload)} bytes, expected {expected}")

    flat = np.frombuffer(payload, dtype=dtype)
    data = flat.reshape(dims, order="F")
    return dims, (spacing[0], spacing[1], spacing[2]), data, type_name


def read_volume(path) -> Volume:
    """Read an image volume; intensities are promoted to float64."""
    dims, spacing, data, _ = _read_nrrd(path)
    if not np.all(np.isfinite(data)):
        raise NonFiniteIntensity(f"{path}: payload contains NaN or infinite values")
    return Volume(dims, spacing, data.astype(np.float64))


def read_mask(path) -> MaskVolume:
    """Read a label volume; labels are kept exactly as stored."""
    dims, spacing, data, type_name = _read_nrrd(path)
    if type_name not in _INTEGER_TYPES:
        raise NonIntegerMaskType(f"{path}: mask voxel type {type_name!r} is not an integer type")
    return MaskVolume(dims, spacing, data.astype(np.int64))


def write_volume(path, volume: Volume | MaskVolume, type_name: str | None = None) -> None:
    """Write *volume* in the supported NRRD subset.

    ``type_name`` defaults to ``double`` for images and ``int`` for masks.
    Single-slice volumes are still written as 3D.
    """
    if isinstance(volume, MaskVolume):
        values = volume.labels
        type_name = type_name or "int"
    else:
        values = volume.data
        type_name = type_name or "double"
    if type_name not in _NRRD_TYPES:
        raise UnsupportedType(type_name)
    header = [
        "NRRD0004",
        "dimension: 3",
        "sizes: " + " ".join(str(d) for d in volume.dims),
        f"type: {type_name}",
        "encoding: raw",
        "endian: little",
        "spacings: " + " ".join(repr(float(s)) for s in volume.spacing),
    ]
    payload = np.asarray(values).astype(_NRRD_TYPES[type_name]).tobytes(order="F")
    Path(path).write_bytes(("\n".join(header) + "\n\n").encode("ascii") + payload)


def validate_geometry(img: Volume, mask: MaskVolume) -> None:
    """Raise unless image and mask share dims exactly and spacing within 1e-4 (relative)."""
    if tuple(img.dims) != tuple(mask.dims):
        raise DimsMismatch(f"image dims {img.dims} != mask dims {mask.dims}")
    for axis, (a, b) in enumerate(zip(img.spacing, mask.spacing)):
        if abs(a - b) > SPACING_RTOL * max(abs(a), abs(b)):
            raise SpacingMismatch(f"spacing differs on axis {axis}: {a} vs {b}")
