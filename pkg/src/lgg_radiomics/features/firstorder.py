"""First-order intensity statistics."""
from __future__ import annotations

import numpy as np

from ..roi import DiscretizedRoi, EmptyRoi, Roi
from .base import FeatureBlock, entropy2

NAMES = (
    "Energy", "TotalEnergy", "Entropy", "Minimum", "Percentile10", "Percentile90",
    "Maximum", "Mean", "Median", "InterquartileRange", "Range", "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation", "RootMeanSquared", "StandardDeviation", "Skewness",
    "Kurtosis", "Variance", "Uniformity",
)


def first_order_features(roi: Roi, droi: DiscretizedRoi) -> FeatureBlock:
    """The 19 first-order statistics.

    Percentiles use linear interpolation between order statistics and are
    taken on raw intensities; Entropy and Uniformity use the gray-level
    histogram of *droi*.  Moments use the population convention, Kurtosis is
    non-excess, and both Skewness and Kurtosis are 0 for a constant ROI.
    RobustMeanAbsoluteDeviation is 0 when no sample lies in [P10, P90].
    """
    x = np.asarray(roi.intensities, dtype=np.float64)
    n = x.size
    if n == 0:
        raise EmptyRoi("first-order features need a non-empty ROI")

    p10, p25, median, p75, p90 = np.percentile(x, [10, 25, 50, 75, 90])
    mean = x.mean()
    dev = x - mean
    var = float(np.mean(dev ** 2))
    std = np.sqrt(var)
    if std > 0:
        z = dev / std  # avoids under/overflow of std**3, var**2
        skew = float(np.mean(z ** 3))
        kurt = float(np.mean(z ** 4))
    else:
        skew = kurt = 0.0

    # interpolated percentiles can bracket no sample at all (e.g. two distinct values)
    robust = x[(x >= p10) & (x <= p90)]
    robust_mad = float(np.mean(np.abs(robust - robust.mean()))) if robust.size else 0.0

    energy = float(np.sum(x ** 2))
    hist = np.bincount(droi.levels, minlength=droi.ng + 1)[1:] / n

    values = {
        "Energy": energy,
        "TotalEnergy": roi.voxel_volume * energy,
        "Entropy": entropy2(hist),
        "Minimum": float(x.min()),
        "Percentile10": float(p10),
        "Percentile90": float(p90),
        "Maximum": float(x.max()),
        "Mean": float(mean),
        "Median": float(median),
        "InterquartileRange": float(p75 - p25),
        "Range": float(x.max() - x.min()),
        "MeanAbsoluteDeviation": float(np.mean(np.abs(dev))),
        "RobustMeanAbsoluteDeviation": robust_mad,
        "RootMeanSquared": float(np.sqrt(energy / n)),
        "StandardDeviation": float(std),
        "Skewness": skew,
        "Kurtosis": kurt,
        "Variance": var,
        "Uniformity": float(np.sum(hist ** 2)),
    }
    return FeatureBlock.from_mapping("firstorder", NAMES, values)
