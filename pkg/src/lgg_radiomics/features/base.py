from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Extraction order; the per-class counts sum to 120.
CLASS_COUNTS = {
    "firstorder": 19,
    "shape3d": 16,
    "shape2d": 10,
    "glcm": 24,
    "glrlm": 16,
    "glszm": 16,
    "gldm": 14,
    "ngtdm": 5,
}


@dataclass(frozen=True)
class FeatureBlock:
    class_name: str
    names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"{self.class_name}: duplicate feature names")
        if len(self.names) != len(self.values):
            raise ValueError(f"{self.class_name}: {len(self.names)} names for {len(self.values)} values")
        expected = CLASS_COUNTS.get(self.class_name)
        if expected is not None and len(self.names) != expected:
            raise ValueError(f"{self.class_name}: expected {expected} features, got {len(self.names)}")
        bad = [n for n, v in zip(self.names, self.values) if not math.isfinite(v)]
        if bad:
            raise ValueError(f"{self.class_name}: non-finite values for {bad}")

    @classmethod
    def from_mapping(cls, class_name, names, mapping) -> "FeatureBlock":
        return cls(class_name, tuple(names), tuple(float(mapping[n]) for n in names))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]

    def __len__(self) -> int:
        return len(self.names)

    def column_names(self) -> list[str]:
        return [f"{self.class_name}_{n}" for n in self.names]


def entropy2(p) -> float:
    """Base-2 Shannon entropy with 0*log(0) taken as 0."""
    p = np.asarray(p, dtype=np.float64).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0  # no -0.0
