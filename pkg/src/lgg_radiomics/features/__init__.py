"""Radiomic feature classes and the 120-feature extraction entry point."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..roi import BinSpec, discretize, extract_roi
from ..volume_io import MaskVolume, Volume
from .base import CLASS_COUNTS, FeatureBlock
from .firstorder import first_order_features
from .shape import ShapeGeometry, shape2d_features, shape3d_features
from .texture import (
    build_glcm,
    gldm_features,
    glcm_features,
    glrlm_features,
    glszm_features,
    ngtdm_features,
)

__all__ = ["CLASS_COUNTS", "FeatureBlock", "FeatureVector", "extract_all", "feature_names"]


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: tuple[float, ...]
    blocks: tuple[FeatureBlock, ...]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def __len__(self) -> int:
        return len(self.names)


def extract_all(img: Volume, mask: MaskVolume, label: int = 1,
                spec: BinSpec | None = None) -> FeatureVector:
    """Extract the 120 original-image features of one case, in class order."""
    roi = extract_roi(img, mask, label)
    droi = discretize(roi, spec or BinSpec())
    geom = ShapeGeometry.from_roi(roi)
    blocks = (
        first_order_features(roi, droi),
        shape3d_features(geom),
        shape2d_features(geom),
        glcm_features(build_glcm(droi)),
        glrlm_features(droi),
        glszm_features(droi),
        gldm_features(droi),
        ngtdm_features(droi),
    )
    names = tuple(n for b in blocks for n in b.column_names())
    values = tuple(float(v) for b in blocks for v in b.values)
    return FeatureVector(names, values, blocks)


def feature_names() -> list[str]:
    """Column names of the feature vector, computed on a tiny probe ROI."""
    img = Volume((2, 2, 2), (1.0, 1.0, 1.0), np.arange(8, dtype=float))
    mask = MaskVolume((2, 2, 2), (1.0, 1.0, 1.0), np.ones(8, dtype=np.int64))
    return list(extract_all(img, mask).names)
