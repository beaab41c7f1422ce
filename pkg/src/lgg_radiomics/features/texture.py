"""Gray-level texture matrices (GLCM, GLRLM, GLSZM, GLDM, NGTDM) and their features.

All matrices are built on the discretized ROI as one 3D unit.  Gray levels
run 1..Ng; levels absent from the ROI keep their (zero) rows so matrix
shapes depend only on Ng.  Neighbourhoods use Chebyshev distance 1
(26-connectivity), and a voxel pair only counts when both voxels are in the
ROI.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import ndimage

from ..roi import DiscretizedRoi
from .base import FeatureBlock, entropy2

GLCM_NAMES = (
    "Autocorrelation", "JointAverage", "ClusterProminence", "ClusterShade", "ClusterTendency",
    "Contrast", "Correlation", "DifferenceAverage", "DifferenceEntropy", "DifferenceVariance",
    "JointEnergy", "JointEntropy", "Imc1", "Imc2", "Idm", "Idmn", "Id", "Idn", "InverseVariance",
    "MaximumProbability", "SumAverage", "SumEntropy", "SumSquares", "MCC",
)
GLRLM_NAMES = (
    "ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized", "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized", "RunPercentage", "GrayLevelVariance", "RunVariance",
    "RunEntropy", "LowGrayLevelRunEmphasis", "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis", "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis", "LongRunHighGrayLevelEmphasis",
)
GLSZM_NAMES = (
    "SmallAreaEmphasis", "LargeAreaEmphasis", "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized", "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized", "ZonePercentage", "GrayLevelVariance", "ZoneVariance",
    "ZoneEntropy", "LowGrayLevelZoneEmphasis", "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis", "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis", "LargeAreaHighGrayLevelEmphasis",
)
GLDM_NAMES = (
    "SmallDependenceEmphasis", "LargeDependenceEmphasis", "GrayLevelNonUniformity",
    "DependenceNonUniformity", "DependenceNonUniformityNormalized", "GrayLevelVariance",
    "DependenceVariance", "DependenceEntropy", "LowGrayLevelEmphasis", "HighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis", "SmallDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis", "LargeDependenceHighGrayLevelEmphasis",
)
NGTDM_NAMES = ("Coarseness", "Contrast", "Busyness", "Complexity", "Strength")

COARSENESS_CAP = 1e6


def directions(distance: int = 1) -> list[tuple[int, int, int]]:
    """Offsets at Chebyshev distance *distance*, one per opposite pair.

    The representative of each pair is the one whose first non-zero
    component is positive; distance 1 gives the 13 directions of the
    26-neighbourhood.
    """
    out = []
    for d in itertools.product(range(-distance, distance + 1), repeat=3):
        if max(abs(c) for c in d) != distance:
            continue
        first = next(c for c in d if c != 0)
        if first > 0:
            out.append(d)
    return out


NEIGHBOURS = [d for d in itertools.product((-1, 0, 1), repeat=3) if d != (0, 0, 0)]


@dataclass(frozen=True, eq=False)
class TextureMatrix:
    """One texture matrix.

    ``counts`` holds the raw tallies; ``matrix`` is the form features are
    computed from (normalized for GLCM, equal to ``counts`` otherwise; for
    NGTDM the columns are n_i, p_i, s_i).
    """

    family: str
    matrix: np.ndarray
    ng: int
    direction: tuple[int, int, int] | None = None
    counts: np.ndarray | None = None


def _padded(droi: DiscretizedRoi, pad: int = 1):
    grid = np.pad(droi.level_grid(), pad)
    coords = droi.roi.local_coords() + pad
    return grid, coords, np.asarray(droi.levels, dtype=np.int64)


def _fits_bbox(d, shape) -> bool:
    return all(abs(c) < s for c, s in zip(d, shape))


def _neighbour_levels(grid, coords, offset) -> np.ndarray:
    nb = coords + np.asarray(offset)
    return grid[nb[:, 0], nb[:, 1], nb[:, 2]]


# ----------------------------------------------------------------------------- GLCM

def build_glcm(droi: DiscretizedRoi, distance: int = 1) -> list[TextureMatrix]:
    """Symmetric, normalized co-occurrence matrices, one per usable direction.

    Directions that do not fit in the ROI bounding box or that yield no
    voxel pair are skipped.  An ROI with no neighbouring pair at all (e.g.
    a single voxel) yields one matrix of self-pairs so its features stay
    defined.
    """
    ng = droi.ng
    grid, coords, lv = _padded(droi, distance)
    shape = droi.roi.shape
    out = []
    for d in directions(distance):
        if not _fits_bbox(d, shape):
            continue
        nb = _neighbour_levels(grid, coords, d)
        ok = nb > 0
        if not ok.any():
            continue
        counts = np.bincount((lv[ok] - 1) * ng + (nb[ok] - 1), minlength=ng * ng)
        counts = counts.reshape(ng, ng).astype(np.float64)
        counts = counts + counts.T
        out.append(TextureMatrix("GLCM", counts / counts.sum(), ng, d, counts))
    if not out:
        counts = np.diag(np.bincount(lv - 1, minlength=ng)).astype(np.float64) * 2
        out.append(TextureMatrix("GLCM", counts / counts.sum(), ng, None, counts))
    return out


def _glcm_single(p: np.ndarray) -> dict[str, float]:
    ng = p.shape[0]
    i = np.arange(1, ng + 1, dtype=np.float64)[:, None]
    j = i.T
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    lv = np.arange(1, ng + 1, dtype=np.float64)
    ux = float(px @ lv)
    uy = float(py @ lv)
    sx = math.sqrt(max(float(px @ (lv - ux) ** 2), 0.0))
    sy = math.sqrt(max(float(py @ (lv - uy) ** 2), 0.0))

    # p_{x+y}(k), k = 2..2Ng and p_{x-y}(k), k = 0..Ng-1
    sum_idx = (i + j).astype(np.int64).ravel()
    diff_idx = np.abs(i - j).astype(np.int64).ravel()
    p_sum = np.bincount(sum_idx, weights=p.ravel(), minlength=2 * ng + 1)[2:]
    k_sum = np.arange(2, 2 * ng + 1, dtype=np.float64)
    p_diff = np.bincount(diff_idx, weights=p.ravel(), minlength=ng)
    k_diff = np.arange(ng, dtype=np.float64)

    hx = entropy2(px)
    hy = entropy2(py)
    hxy = entropy2(p)
    pxpy = px[:, None] * py[None, :]
    nz = pxpy > 0
    hxy1 = float(-np.sum(p[nz] * np.log2(pxpy[nz])))
    hxy2 = entropy2(pxpy)

    autocorr = float(np.sum(p * i * j))
    tend = i + j - ux - uy
    diff_avg = float(p_diff @ k_diff)
    sum_avg = float(p_sum @ k_sum)
    d2 = (i - j) ** 2
    off = d2 > 0

    corr = (autocorr - ux * uy) / (sx * sy) if sx * sy > 0 else 1.0
    hmax = max(hx, hy)
    imc1 = (hxy - hxy1) / hmax if hmax > 0 else 0.0
    imc2 = math.sqrt(max(0.0, 1.0 - math.exp(-2.0 * (hxy2 - hxy))))

    return {
        "Autocorrelation": autocorr,
        "JointAverage": ux,
        "ClusterProminence": float(np.sum(tend ** 4 * p)),
        "ClusterShade": float(np.sum(tend ** 3 * p)),
        "ClusterTendency": float(np.sum(tend ** 2 * p)),
        "Contrast": float(np.sum(d2 * p)),
        "Correlation": corr,
        "DifferenceAverage": diff_avg,
        "DifferenceEntropy": entropy2(p_diff),
        "DifferenceVariance": float(p_diff @ (k_diff - diff_avg) ** 2),
        "JointEnergy": float(np.sum(p ** 2)),
        "JointEntropy": hxy,
        "Imc1": imc1,
        "Imc2": imc2,
        "Idm": float(np.sum(p / (1 + d2))),
        "Idmn": float(np.sum(p / (1 + d2 / ng ** 2))),
        "Id": float(np.sum(p / (1 + np.sqrt(d2)))),
        "Idn": float(np.sum(p / (1 + np.sqrt(d2) / ng))),
        "InverseVariance": float(np.sum(p[off] / d2[off])),
        "MaximumProbability": float(p.max()),
        "SumAverage": sum_avg,
        "SumEntropy": entropy2(p_sum),
        "SumSquares": float(np.sum((i - ux) ** 2 * p)),
        "MCC": _mcc(p, px, py),
    }


def _mcc(p, px, py) -> float:
    rows = px > 0
    cols = py > 0
    if rows.sum() < 2:
        return 1.0
    sub = p[np.ix_(rows, cols)]
    a = sub / px[rows][:, None]
    b = sub / py[cols][None, :]
    q = a @ b.T
    eig = np.sort(np.real(np.linalg.eigvals(q)))[::-1]
    return math.sqrt(max(float(eig[1]), 0.0))


def glcm_features(matrices: list[TextureMatrix]) -> FeatureBlock:
    """24 GLCM features, each averaged over directions."""
    if not matrices:
        raise ValueError("no GLCM matrices supplied")
    per_dir = [_glcm_single(m.matrix) for m in matrices]
    values = {n: float(np.mean([f[n] for f in per_dir])) for n in GLCM_NAMES}
    return FeatureBlock.from_mapping("glcm", GLCM_NAMES, values)


# -------------------------------------------------------- run / zone / dependence

def _emphasis_stats(P: np.ndarray, n_voxels: int) -> dict[str, float]:
    """Shared statistics of a (gray level x size) tally matrix.

    Keys are generic: "small"/"large" emphasis, gray-level and size
    non-uniformity (plus normalized), percentage, variances, entropy and the
    six gray-level weighted emphases.
    """
    ng, nj = P.shape
    total = float(P.sum())
    i = np.arange(1, ng + 1, dtype=np.float64)[:, None]
    j = np.arange(1, nj + 1, dtype=np.float64)[None, :]
    pg = P.sum(axis=1)
    ps = P.sum(axis=0)
    p = P / total
    mu_i = float(np.sum(p * i))
    mu_j = float(np.sum(p * j))
    return {
        "small": float(np.sum(P / j ** 2)) / total,
        "large": float(np.sum(P * j ** 2)) / total,
        "gln": float(np.sum(pg ** 2)) / total,
        "glnn": float(np.sum(pg ** 2)) / total ** 2,
        "sn": float(np.sum(ps ** 2)) / total,
        "snn": float(np.sum(ps ** 2)) / total ** 2,
        "pct": total / n_voxels,
        "glv": float(np.sum(p * (i - mu_i) ** 2)),
        "sv": float(np.sum(p * (j - mu_j) ** 2)),
        "ent": entropy2(p),
        "lgl": float(np.sum(P / i ** 2)) / total,
        "hgl": float(np.sum(P * i ** 2)) / total,
        "s_lgl": float(np.sum(P / (i ** 2 * j ** 2))) / total,
        "s_hgl": float(np.sum(P * i ** 2 / j ** 2)) / total,
        "l_lgl": float(np.sum(P * j ** 2 / i ** 2)) / total,
        "l_hgl": float(np.sum(P * i ** 2 * j ** 2)) / total,
    }


_RUN_KEYS = ("small", "large", "gln", "glnn", "sn", "snn", "pct", "glv", "sv", "ent",
             "lgl", "hgl", "s_lgl", "s_hgl", "l_lgl", "l_hgl")
_DEP_KEYS = ("small", "large", "gln", "sn", "snn", "glv", "sv", "ent",
             "lgl", "hgl", "s_lgl", "s_hgl", "l_lgl", "l_hgl")


def glrlm_matrices(droi: DiscretizedRoi) -> list[TextureMatrix]:
    """Run-length matrices (Ng x longest bbox side), one per direction.

    Directions that do not fit in the bounding box are skipped; if none fits
    (single voxel) every direction is used, each giving one run of length 1.
    """
    ng = droi.ng
    grid, coords, lv = _padded(droi)
    shape = droi.roi.shape
    max_run = max(shape)
    dirs = [d for d in directions(1) if _fits_bbox(d, shape)] or directions(1)
    out = []
    for d in dirs:
        step = np.asarray(d)
        start = _neighbour_levels(grid, coords, -step) != lv
        pos = coords[start]
        lev = lv[start]
        length = np.ones(len(pos), dtype=np.int64)
        active = np.arange(len(pos))
        cur = pos.copy()
        while active.size:
            cur[active] += step
            c = cur[active]
            same = grid[c[:, 0], c[:, 1], c[:, 2]] == lev[active]
            active = active[same]
            length[active] += 1
        counts = np.zeros((ng, max_run), dtype=np.float64)
        np.add.at(counts, (lev - 1, length - 1), 1.0)
        out.append(TextureMatrix("GLRLM", counts, ng, d, counts))
    return out


def glrlm_features(droi: DiscretizedRoi) -> FeatureBlock:
    per_dir = [_emphasis_stats(m.matrix, droi.size) for m in glrlm_matrices(droi)]
    values = {name: float(np.mean([s[key] for s in per_dir]))
              for name, key in zip(GLRLM_NAMES, _RUN_KEYS)}
    return FeatureBlock.from_mapping("glrlm", GLRLM_NAMES, values)


def glszm_matrix(droi: DiscretizedRoi) -> TextureMatrix:
    """Size-zone matrix (Ng x N voxels) of 26-connected equal-level zones."""
    ng = droi.ng
    grid = droi.level_grid()
    counts = np.zeros((ng, droi.size), dtype=np.float64)
    structure = np.ones((3, 3, 3), dtype=bool)
    for level in range(1, ng + 1):
        labelled, n_zones = ndimage.label(grid == level, structure=structure)
        if n_zones == 0:
            continue
        sizes = np.bincount(labelled.ravel())[1:]
        np.add.at(counts, (level - 1, sizes - 1), 1.0)
    return TextureMatrix("GLSZM", counts, ng, None, counts)


def glszm_features(droi: DiscretizedRoi) -> FeatureBlock:
    stats = _emphasis_stats(glszm_matrix(droi).matrix, droi.size)
    values = {name: stats[key] for name, key in zip(GLSZM_NAMES, _RUN_KEYS)}
    return FeatureBlock.from_mapping("glszm", GLSZM_NAMES, values)


def dependence_counts(droi: DiscretizedRoi, alpha: int = 0) -> np.ndarray:
    """Per-voxel dependence: 1 + number of ROI neighbours within *alpha* levels."""
    grid, coords, lv = _padded(droi)
    dep = np.ones(len(lv), dtype=np.int64)
    for off in NEIGHBOURS:
        nb = _neighbour_levels(grid, coords, off)
        dep += (nb > 0) & (np.abs(nb - lv) <= alpha)
    return dep


def gldm_matrix(droi: DiscretizedRoi, alpha: int = 0) -> TextureMatrix:
    """Dependence matrix (Ng x 27), column d-1 holds voxels of dependence d."""
    ng = droi.ng
    dep = dependence_counts(droi, alpha)
    counts = np.zeros((ng, len(NEIGHBOURS) + 1), dtype=np.float64)
    np.add.at(counts, (np.asarray(droi.levels) - 1, dep - 1), 1.0)
    return TextureMatrix("GLDM", counts, ng, None, counts)


def gldm_features(droi: DiscretizedRoi, alpha: int = 0) -> FeatureBlock:
    stats = _emphasis_stats(gldm_matrix(droi, alpha).matrix, droi.size)
    values = {name: stats[key] for name, key in zip(GLDM_NAMES, _DEP_KEYS)}
    return FeatureBlock.from_mapping("gldm", GLDM_NAMES, values)


def ngtdm_matrix(droi: DiscretizedRoi) -> TextureMatrix:
    """Per-level columns n_i, p_i = n_i / N, s_i.

    s_i sums |i - mean level of the voxel's ROI neighbours| over voxels of
    level i; voxels with no ROI neighbour add nothing.  Each term is the
    integer |i*c - t| over the neighbour count c, so s_i is accumulated as
    a rational and rounded once.
    """
    ng = droi.ng
    grid, coords, lv = _padded(droi)
    total = np.zeros(len(lv), dtype=np.int64)
    count = np.zeros(len(lv), dtype=np.int64)
    for off in NEIGHBOURS:
        nb = _neighbour_levels(grid, coords, off)
        inside = nb > 0
        total += np.where(inside, nb, 0)
        count += inside
    numer = np.abs(lv * count - total)
    tally = np.zeros((ng, len(NEIGHBOURS) + 1), dtype=np.int64)
    np.add.at(tally, (lv - 1, count), numer)
    s = np.array([float(sum(Fraction(int(v), c) for c, v in enumerate(row) if c and v))
                  for row in tally])
    n = np.bincount(lv - 1, minlength=ng).astype(np.float64)
    cols = np.column_stack([n, n / len(lv), s])
    return TextureMatrix("NGTDM", cols, ng, None, cols)


def ngtdm_features(droi: DiscretizedRoi) -> FeatureBlock:
    cols = ngtdm_matrix(droi).matrix
    n_vox = droi.size
    p_all, s_all = cols[:, 1], cols[:, 2]
    pop = p_all > 0
    levels = np.arange(1, len(p_all) + 1, dtype=np.float64)[pop]
    p, s = p_all[pop], s_all[pop]
    n_gp = len(p)

    ps = float(p @ s)
    s_total = float(s.sum())
    li, lj = levels[:, None], levels[None, :]
    pi, pj = p[:, None], p[None, :]
    d2 = (li - lj) ** 2

    coarseness = COARSENESS_CAP if ps == 0 else min(1.0 / ps, COARSENESS_CAP)
    if n_gp > 1:
        contrast = float(np.sum(pi * pj * d2)) / (n_gp * (n_gp - 1)) * s_total / n_vox
    else:
        contrast = 0.0
    busy_den = float(np.sum(np.abs(li * pi - lj * pj)))
    busyness = ps / busy_den if busy_den > 0 else 0.0
    complexity = float(np.sum(np.sqrt(d2) * (pi * s[:, None] + pj * s[None, :]) / (pi + pj))) / n_vox
    strength = float(np.sum((pi + pj) * d2)) / s_total if s_total > 0 else 0.0

    values = {
        "Coarseness": coarseness,
        "Contrast": contrast,
        "Busyness": busyness,
        "Complexity": complexity,
        "Strength": strength,
    }
    return FeatureBlock.from_mapping("ngtdm", NGTDM_NAMES, values)
