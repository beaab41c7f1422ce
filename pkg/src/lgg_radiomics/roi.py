"""ROI extraction and gray-level discretization."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .volume_io import MaskVolume, Volume, validate_geometry

# absorbs representation error in (x - min) / width, e.g. 0.3 / 0.1
_BIN_EPS = 1e-9


class EmptyRoi(ValueError):
    """The requested label is not present in the mask."""


@dataclass(frozen=True)
class BinSpec:
    mode: str = "fixed-width"
    width: float = 25.0
    count: int = 32

    def __post_init__(self):
        if self.mode == "fixed-width":
            if not self.width > 0:
                raise ValueError(f"bin width must be > 0, got {self.width}")
        elif self.mode == "fixed-count":
            if int(self.count) != self.count or self.count < 2:
                raise ValueError(f"bin count must be an integer >= 2, got {self.count}")
        else:
            raise ValueError(f"unknown bin mode {self.mode!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "BinSpec":
        return cls(mode=d.get("mode", "fixed-width"),
                   width=float(d.get("width", 25.0)),
                   count=int(d.get("count", 32)))

    def to_dict(self) -> dict:
        if self.mode == "fixed-width":
            return {"mode": self.mode, "width": self.width}
        return {"mode": self.mode, "count": self.count}


@dataclass(frozen=True, eq=False)
class Roi:
    """Voxels of one label: ``coords`` is (N, 3) int, ``intensities`` is (N,)."""

    coords: np.ndarray
    intensities: np.ndarray
    spacing: tuple[float, float, float]
    bbox: tuple[tuple[int, int, int], tuple[int, int, int]]

    @property
    def size(self) -> int:
        return len(self.intensities)

    @property
    def voxel_volume(self) -> float:
        return self.spacing[0] * self.spacing[1] * self.spacing[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        lo, hi = self.bbox
        return tuple(h - l + 1 for l, h in zip(lo, hi))

    def local_coords(self) -> np.ndarray:
        """Coordinates relative to the bounding-box corner."""
        return self.coords - np.asarray(self.bbox[0])

    def grid(self, values, fill=0) -> np.ndarray:
        """Scatter per-voxel *values* into a bbox-sized array."""
        values = np.asarray(values)
        out = np.full(self.shape, fill, dtype=values.dtype)
        c = self.local_coords()
        out[c[:, 0], c[:, 1], c[:, 2]] = values
        return out


@dataclass(frozen=True, eq=False)
class DiscretizedRoi:
    roi: Roi
    levels: np.ndarray
    ng: int
    bin_spec: BinSpec = field(default_factory=BinSpec)

    @property
    def size(self) -> int:
        return self.roi.size

    def level_grid(self) -> np.ndarray:
        """Bbox-sized int array of levels; 0 marks voxels outside the ROI."""
        return self.roi.grid(self.levels.astype(np.int64), fill=0)


def extract_roi(img: Volume, mask: MaskVolume, label: int = 1) -> Roi:
    validate_geometry(img, mask)
    if label < 1:
        raise ValueError(f"ROI label must be >= 1, got {label}")
    coords = np.argwhere(mask.labels == label)
    if len(coords) == 0:
        raise EmptyRoi(f"no voxel carries label {label}")
    intensities = img.data[coords[:, 0], coords[:, 1], coords[:, 2]].astype(np.float64)
    lo = tuple(int(v) for v in coords.min(axis=0))
    hi = tuple(int(v) for v in coords.max(axis=0))
    coords.setflags(write=False)
    intensities.setflags(write=False)
    return Roi(coords, intensities, tuple(img.spacing), (lo, hi))


def discretize(roi: Roi, spec: BinSpec | None = None) -> DiscretizedRoi:
    """Map intensities to gray levels 1..Ng with edges anchored at the ROI minimum."""
    spec = spec or BinSpec()
    x = roi.intensities
    if x.size == 0:
        raise EmptyRoi("cannot discretize an empty ROI")
    lo, hi = float(x.min()), float(x.max())
    if spec.mode == "fixed-width":
        width = spec.width
        cap = None
    else:
        width = (hi - lo) / spec.count
        cap = spec.count
    if width <= 0 or hi == lo:
        levels = np.ones(x.shape, dtype=np.int64)
    else:
        levels = np.floor((x - lo) / width + _BIN_EPS).astype(np.int64) + 1
        if cap is not None:
            np.minimum(levels, cap, out=levels)
    levels.setflags(write=False)
    return DiscretizedRoi(roi, levels, int(levels.max()), spec)


def max_levels(roi: Roi, width: float) -> int:
    """Upper bound on Ng for fixed-width binning."""
    rng = float(roi.intensities.max() - roi.intensities.min())
    return math.ceil(rng / width) + 1
