"""Shape descriptors of the ROI, computed on the voxel (face-counting) representation.

Surface area and perimeter count exposed voxel faces / pixel edges rather
than a marching-cubes mesh, so values differ from mesh-based tools but are
exact on hand-countable fixtures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..roi import EmptyRoi, Roi
from .base import FeatureBlock

NAMES_3D = (
    "VoxelVolume", "SurfaceArea", "SurfaceVolumeRatio", "Sphericity", "Compactness1",
    "Compactness2", "SphericalDisproportion", "Maximum3DDiameter", "Maximum2DDiameterSlice",
    "Maximum2DDiameterColumn", "Maximum2DDiameterRow", "MajorAxisLength", "MinorAxisLength",
    "LeastAxisLength", "Elongation", "Flatness",
)
NAMES_2D = (
    "PixelSurface", "Perimeter", "PerimeterSurfaceRatio", "Sphericity2D",
    "SphericalDisproportion2D", "MaximumDiameter", "MajorAxisLength", "MinorAxisLength",
    "Elongation", "EffectiveDiameter",
)

_HULL_MIN_POINTS = 64
_PAIR_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class ShapeGeometry:
    """Voxel geometry of one ROI.

    ``exposed[a]`` counts voxel faces perpendicular to axis ``a`` that are
    not shared with another ROI voxel (6-neighbourhood).  ``boundary`` flags
    voxels having at least one exposed face.
    """

    index: np.ndarray          # (N, 3) voxel indices
    spacing: tuple[float, float, float]
    exposed: tuple[int, int, int]
    boundary: np.ndarray       # (N,) bool

    @classmethod
    def from_roi(cls, roi: Roi) -> "ShapeGeometry":
        if roi.size == 0:
            raise EmptyRoi("shape features need a non-empty ROI")
        occ = np.pad(roi.grid(np.ones(roi.size, dtype=bool), fill=False), 1)
        local = roi.local_coords() + 1
        exposed = []
        open_face = np.zeros(roi.size, dtype=bool)
        for axis in range(3):
            count = 0
            for step in (-1, 1):
                nb = local.copy()
                nb[:, axis] += step
                free = ~occ[nb[:, 0], nb[:, 1], nb[:, 2]]
                count += int(free.sum())
                open_face |= free
            exposed.append(count)
        return cls(np.asarray(roi.coords), tuple(roi.spacing), tuple(exposed), open_face)

    @property
    def points(self) -> np.ndarray:
        """Voxel centres in mm."""
        return self.index * np.asarray(self.spacing)

    @property
    def voxel_volume(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    @property
    def surface_area(self) -> float:
        sx, sy, sz = self.spacing
        ex, ey, ez = self.exposed
        return ex * sy * sz + ey * sx * sz + ez * sx * sy


def _brute_max_distance(pts: np.ndarray) -> float:
    best = 0.0
    for start in range(0, len(pts), _PAIR_CHUNK):
        block = pts[start:start + _PAIR_CHUNK]
        d2 = np.sum((block[:, None, :] - pts[None, start:, :]) ** 2, axis=-1)
        best = max(best, float(d2.max()))
    return math.sqrt(best)


def max_pairwise_distance(points: np.ndarray) -> float:
    """Largest Euclidean distance between any two points (0 for fewer than two)."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) < 2:
        return 0.0
    if len(pts) >= _HULL_MIN_POINTS:
        # the farthest pair always lies on the convex hull
        try:
            pts = pts[np.sort(ConvexHull(pts).vertices)]
        except (QhullError, ValueError):
            pass  # flat or degenerate set, fall back to all points
    return _brute_max_distance(pts)


def _plane_max_diameter(points: np.ndarray, plane_key: np.ndarray, drop_axis: int) -> float:
    keep = [a for a in range(points.shape[1]) if a != drop_axis]
    best = 0.0
    for key in np.unique(plane_key):
        best = max(best, max_pairwise_distance(points[plane_key == key][:, keep]))
    return best


def _axis_eigenvalues(points: np.ndarray) -> np.ndarray:
    """Eigenvalues (descending, clipped at 0) of the population covariance."""
    centered = points - points.mean(axis=0)
    cov = centered.T @ centered / len(points)
    lam = np.linalg.eigvalsh(cov)[::-1]
    return np.clip(lam, 0.0, None)


def _ratio(num: float, den: float) -> float:
    return math.sqrt(num / den) if den > 0 else 0.0


def shape3d_features(geom: ShapeGeometry) -> FeatureBlock:
    n = len(geom.index)
    if n == 0:
        raise EmptyRoi("shape features need a non-empty ROI")
    volume = n * geom.voxel_volume
    area = geom.surface_area
    sphericity = math.pi ** (1 / 3) * (6 * volume) ** (2 / 3) / area

    pts = geom.points
    edge = pts[geom.boundary]
    edge_idx = geom.index[geom.boundary]
    lam = _axis_eigenvalues(pts)

    values = {
        "VoxelVolume": volume,
        "SurfaceArea": area,
        "SurfaceVolumeRatio": area / volume,
        "Sphericity": sphericity,
        "Compactness1": volume / (math.sqrt(math.pi) * area ** 1.5),
        "Compactness2": 36 * math.pi * volume ** 2 / area ** 3,
        "SphericalDisproportion": 1.0 / sphericity,
        "Maximum3DDiameter": max_pairwise_distance(edge),
        "Maximum2DDiameterSlice": _plane_max_diameter(edge, edge_idx[:, 2], 2),
        "Maximum2DDiameterColumn": _plane_max_diameter(edge, edge_idx[:, 0], 0),
        "Maximum2DDiameterRow": _plane_max_diameter(edge, edge_idx[:, 1], 1),
        "MajorAxisLength": 4 * math.sqrt(lam[0]),
        "MinorAxisLength": 4 * math.sqrt(lam[1]),
        "LeastAxisLength": 4 * math.sqrt(lam[2]),
        "Elongation": _ratio(lam[1], lam[0]),
        "Flatness": _ratio(lam[2], lam[0]),
    }
    return FeatureBlock.from_mapping("shape3d", NAMES_3D, values)


def largest_slice(geom: ShapeGeometry) -> int:
    """Axial index with the most ROI pixels; ties go to the lowest index."""
    ks, counts = np.unique(geom.index[:, 2], return_counts=True)
    return int(ks[np.argmax(counts)])


def shape2d_features(geom: ShapeGeometry) -> FeatureBlock:
    if len(geom.index) == 0:
        raise EmptyRoi("shape features need a non-empty ROI")
    k = largest_slice(geom)
    ij = geom.index[geom.index[:, 2] == k][:, :2]
    sx, sy = geom.spacing[0], geom.spacing[1]

    lo = ij.min(axis=0)
    local = ij - lo + 1
    occ = np.zeros(tuple(local.max(axis=0) + 2), dtype=bool)
    occ[local[:, 0], local[:, 1]] = True
    perimeter = 0.0
    open_edge = np.zeros(len(ij), dtype=bool)
    for axis, edge_len in ((0, sy), (1, sx)):
        for step in (-1, 1):
            nb = local.copy()
            nb[:, axis] += step
            free = ~occ[nb[:, 0], nb[:, 1]]
            perimeter += edge_len * int(free.sum())
            open_edge |= free

    area = len(ij) * sx * sy
    pts = ij * np.array([sx, sy])
    lam = _axis_eigenvalues(pts)
    sph = 2 * math.sqrt(math.pi * area) / perimeter

    values = {
        "PixelSurface": area,
        "Perimeter": perimeter,
        "PerimeterSurfaceRatio": perimeter / area,
        "Sphericity2D": sph,
        "SphericalDisproportion2D": 1.0 / sph,
        "MaximumDiameter": max_pairwise_distance(pts[open_edge]),
        "MajorAxisLength": 4 * math.sqrt(lam[0]),
        "MinorAxisLength": 4 * math.sqrt(lam[1]),
        "Elongation": _ratio(lam[1], lam[0]),
        "EffectiveDiameter": 2 * math.sqrt(area / math.pi),
    }
    return FeatureBlock.from_mapping("shape2d", NAMES_2D, values)
