import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bimef.metrics import LoeConfig, loe, loe_from_lightness


def brute_loe(L, L2):
    a, b = L.ravel(), L2.ravel()
    m = a.size
    rd = [sum((a[x] >= a[y]) != (b[x] >= b[y]) for y in range(m)) for x in range(m)]
    return sum(rd) / m


def test_config_validation():
    with pytest.raises(ValueError):
        LoeConfig(sample_size=1)


def test_identity_is_zero(rng):
    x = rng.random((37, 53, 3))
    assert loe(x, x) == 0.0


def test_strictly_monotone_transform_is_zero(rng):
    x = rng.random((120, 90, 3))
    assert loe(x, np.sqrt(x)) == 0.0
    assert loe(x, x ** 3 * 0.5) == 0.0


def test_two_pixel_flip_raw_maps():
    # RD(x) counts the single other pixel, the reflexive pair agrees
    assert loe_from_lightness(np.array([0.2, 0.8]), np.array([0.8, 0.2])) == 1.0


def test_two_pixel_flip_through_protocol():
    # at sample_size 2 the 1x2 image becomes a 2x2 grid with each value twice
    orig = np.array([[[0.2] * 3, [0.8] * 3]])
    enh = np.array([[[0.8] * 3, [0.2] * 3]])
    assert loe(orig, enh, LoeConfig(sample_size=2)) == 2.0


@settings(deadline=None, max_examples=40)
@given(arrays(np.float64, 12, elements=st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0])),
       arrays(np.float64, 12, elements=st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0])))
def test_matches_brute_force_with_ties(a, b):
    assert loe_from_lightness(a, b, block=5) == brute_loe(a, b)


@settings(deadline=None, max_examples=30)
@given(arrays(np.float64, (6, 5, 3), elements=st.floats(0, 1)),
       arrays(np.float64, (6, 5, 3), elements=st.floats(0, 1)))
def test_symmetric_and_bounded(x, y):
    cfg = LoeConfig(sample_size=4)
    v = loe(x, y, cfg)
    assert v == loe(y, x, cfg)
    assert 0 <= v <= 16


def test_fixed_sample_count(rng):
    # a constant enhanced image flips exactly the pairs with strict order in the original
    x = rng.random((300, 200, 3))
    L = x.max(axis=2)
    value = loe(x, np.full_like(x, 0.5))
    rows = np.floor((np.arange(100) + 0.5) * 3).astype(int)
    cols = np.floor((np.arange(100) + 0.5) * 2).astype(int)
    sub = L[np.ix_(rows, cols)].ravel()
    strict = sum(int(np.count_nonzero(v < sub)) for v in sub)
    assert value == strict / 10000


def test_shape_mismatch():
    with pytest.raises(ValueError):
        loe(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))
