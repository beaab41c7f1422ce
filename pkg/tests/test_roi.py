import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lgg_radiomics.roi import BinSpec, EmptyRoi, discretize, extract_roi
from conftest import volume_pair


def test_full_mask():
    img, mask = volume_pair([[1, 2], [3, 4]], [[1, 1], [1, 1]])
    roi = extract_roi(img, mask, 1)
    assert roi.size == 4
    assert sorted(roi.intensities) == [1, 2, 3, 4]


def test_missing_label():
    img, mask = volume_pair([[1, 2], [3, 4]], [[1, 1], [1, 1]])
    with pytest.raises(EmptyRoi):
        extract_roi(img, mask, 2)


def test_l_shape_bbox():
    mask = np.zeros((4, 4), dtype=int)
    mask[1, 1] = mask[2, 1] = mask[2, 2] = 1
    img, mask = volume_pair(np.arange(16).reshape(4, 4), mask)
    roi = extract_roi(img, mask, 1)
    assert roi.size == 3
    assert roi.bbox == ((1, 1, 0), (2, 2, 0))
    assert roi.shape == (2, 2, 1)


def test_only_requested_label():
    img, mask = volume_pair(np.arange(9).reshape(3, 3), [[0, 1, 2], [2, 1, 0], [1, 1, 2]])
    roi = extract_roi(img, mask, 2)
    assert sorted(roi.intensities) == [2, 3, 8]


def _roi(values):
    img, mask = volume_pair(np.asarray(values, float)[:, None], np.ones((len(values), 1), int))
    return extract_roi(img, mask, 1)


def test_fixed_width_levels():
    d = discretize(_roi([0, 25, 50]), BinSpec("fixed-width", 25))
    assert sorted(d.levels.tolist()) == [1, 2, 3] and d.ng == 3


def test_constant_roi_single_level():
    d = discretize(_roi([7, 7, 7, 7]))
    assert d.levels.tolist() == [1, 1, 1, 1] and d.ng == 1


def test_fixed_count_levels():
    d = discretize(_roi([0, 100]), BinSpec("fixed-count", count=4))
    assert sorted(d.levels.tolist()) == [1, 4] and d.ng == 4


def test_fixed_count_partition():
    # bins of width 25 over [0, 100]; the maximum is clamped into bin 4
    d = discretize(_roi([0, 24.9, 25, 60, 99, 100]), BinSpec("fixed-count", count=4))
    assert d.levels.tolist() == [1, 1, 2, 3, 4, 4]


def test_bad_bin_spec():
    with pytest.raises(ValueError):
        BinSpec("fixed-width", width=0)
    with pytest.raises(ValueError):
        BinSpec("fixed-count", count=1)


values_st = st.lists(st.integers(-500, 500), min_size=1, max_size=40)


@settings(max_examples=80, deadline=None)
@given(values=values_st, width=st.integers(1, 60))
def test_level_invariants(values, width):
    roi = _roi(values)
    d = discretize(roi, BinSpec("fixed-width", width))
    x = roi.intensities
    lv = d.levels
    assert lv.min() >= 1 and lv.max() == d.ng
    order = np.argsort(x, kind="stable")
    assert np.all(np.diff(lv[order]) >= 0)
    expected = np.floor((x - x.min()) / width).astype(int) + 1
    assert np.array_equal(lv, expected)
    assert d.ng <= math.ceil((x.max() - x.min()) / width) + 1


@settings(max_examples=60, deadline=None)
@given(values=values_st, width=st.integers(1, 60), a=st.integers(1, 9), b=st.integers(-1000, 1000))
def test_shift_scale_covariance(values, width, a, b):
    base = discretize(_roi(values), BinSpec("fixed-width", width))
    moved = discretize(_roi([a * v + b for v in values]), BinSpec("fixed-width", a * width))
    assert np.array_equal(base.levels, moved.levels)
