import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lgg_radiomics.roi import BinSpec, DiscretizedRoi, Roi  # noqa: E402
from lgg_radiomics.volume_io import MaskVolume, Volume  # noqa: E402


def droi_from_levels(grid, spacing=(1.0, 1.0, 1.0)) -> DiscretizedRoi:
    """DiscretizedRoi whose levels are the non-zero entries of *grid*."""
    grid = np.asarray(grid, dtype=np.int64)
    if grid.ndim == 2:
        grid = grid[:, :, None]
    coords = np.argwhere(grid > 0)
    levels = grid[coords[:, 0], coords[:, 1], coords[:, 2]]
    lo = tuple(int(v) for v in coords.min(axis=0))
    hi = tuple(int(v) for v in coords.max(axis=0))
    roi = Roi(coords, levels.astype(float), tuple(spacing), (lo, hi))
    return DiscretizedRoi(roi, levels, int(levels.max()), BinSpec())


def volume_pair(image, mask, spacing=(1.0, 1.0, 1.0)):
    image = np.asarray(image, dtype=float)
    mask = np.asarray(mask, dtype=np.int64)
    if image.ndim == 2:
        image = image[:, :, None]
        mask = mask[:, :, None]
    return Volume(image.shape, spacing, image), MaskVolume(mask.shape, spacing, mask)


def random_level_grid(rng, max_shape=(5, 5, 3), max_ng=4):
    shape = tuple(int(rng.integers(1, m + 1)) for m in max_shape)
    ng = int(rng.integers(1, max_ng + 1))
    inside = rng.random(shape) < rng.uniform(0.4, 1.0)
    if not inside.any():
        inside[tuple(int(rng.integers(0, s)) for s in shape)] = True
    levels = rng.integers(1, ng + 1, size=shape)
    return np.where(inside, levels, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def labelled_table(n_pos, n_neg, n_features=6, seed=0):
    """FeatureTable of Gaussian rows with n_pos label-1 and n_neg label-0 cases."""
    from lgg_radiomics.tabular import FeatureTable

    gen = np.random.default_rng(seed)
    n = n_pos + n_neg
    y = np.array([1] * n_pos + [0] * n_neg)[gen.permutation(n)]
    X = gen.normal(size=(n, n_features)) + y[:, None] * 0.8
    ids = [f"c{i:03d}" for i in range(n)]
    names = [f"f{j}" for j in range(n_features)]
    return FeatureTable(ids, names, X, y)


def separable_set(seed, n=152, p=8, margin=0.3):
    """Linearly separable rows: Gaussian points pushed off a random hyperplane."""
    gen = np.random.default_rng(seed)
    w = gen.normal(size=p)
    w /= np.linalg.norm(w)
    X = gen.normal(size=(n, p))
    y = (X @ w > 0).astype(np.int64)
    X += np.where(y == 1, margin, -margin)[:, None] * w
    return X, y


# one (criterion, passed, seconds) entry per acceptance test, reported at the end of the run
ACCEPTANCE_RESULTS: list[tuple[str, bool, float]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, seconds in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  ({seconds:.2f} s)")
