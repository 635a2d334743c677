"""Block maxima, ranks and exceedance counting."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from exclust.base import as_sample, check_block_size
from exclust.blocks import count_exceedances, disjoint_maxima, ranks, sliding_maxima


def naive_sliding_maxima(x, b):
    return np.array([np.max(x[s : s + b]) for s in range(len(x) - b + 1)])


def test_disjoint_maxima_hand():
    x = [3.0, 1.0, 2.0, 5.0, 4.0, 0.0]
    np.testing.assert_array_equal(disjoint_maxima(x, 2), [3.0, 5.0, 4.0])
    np.testing.assert_array_equal(disjoint_maxima(x, 3), [3.0, 5.0])


def test_disjoint_maxima_drops_remainder():
    x = [1.0, 2.0, 3.0, 4.0, 9.0]
    np.testing.assert_array_equal(disjoint_maxima(x, 2), [2.0, 4.0])


def test_sliding_maxima_hand():
    x = [1.0, 3.0, 2.0, 0.0, 4.0, 1.0]
    np.testing.assert_array_equal(sliding_maxima(x, 2), [3.0, 3.0, 2.0, 4.0, 4.0])
    np.testing.assert_array_equal(sliding_maxima(x, 3), [3.0, 3.0, 4.0, 4.0])


def test_sliding_maxima_window_equals_series_length_rejected():
    # b is capped at n // 2 so at least two disjoint blocks exist
    with pytest.raises(ValueError):
        sliding_maxima([1.0, 2.0, 3.0], 2)


@st.composite
def series_and_block(draw, max_n=120):
    n = draw(st.integers(min_value=4, max_value=max_n))
    kind = draw(st.sampled_from(["float", "int"]))
    if kind == "float":
        x = draw(hnp.arrays(np.float64, n,
                            elements=st.floats(-1e6, 1e6, allow_nan=False)))
    else:
        # heavy ties
        x = draw(hnp.arrays(np.int64, n, elements=st.integers(0, 5))).astype(float)
    b = draw(st.integers(min_value=2, max_value=n // 2))
    return x, b


@given(series_and_block())
@settings(max_examples=60, deadline=None)
def test_sliding_maxima_matches_naive(case):
    x, b = case
    np.testing.assert_array_equal(sliding_maxima(x, b), naive_sliding_maxima(x, b))


@given(series_and_block())
@settings(max_examples=30, deadline=None)
def test_disjoint_maxima_matches_naive(case):
    x, b = case
    k = len(x) // b
    naive = [np.max(x[i * b : (i + 1) * b]) for i in range(k)]
    np.testing.assert_array_equal(disjoint_maxima(x, b), naive)


def test_ranks_ties_use_max_rank():
    np.testing.assert_allclose(ranks([1.0, 2.0, 2.0, 3.0]), [0.25, 0.75, 0.75, 1.0])


def test_ranks_maximum_maps_to_one():
    rng = np.random.default_rng(0)
    x = rng.normal(size=57)
    r = ranks(x)
    assert r[np.argmax(x)] == 1.0
    assert np.all((r > 0) & (r <= 1))


def test_count_exceedances_is_strict():
    x = [1.0, 2.0, 3.0, 2.0]
    assert count_exceedances(x, 0, 4, 2.0) == 1
    assert count_exceedances(x, 0, 2, 0.5) == 2
    with pytest.raises(ValueError):
        count_exceedances(x, 2, 3, 0.0)


def test_as_sample_validation():
    with pytest.raises(ValueError):
        as_sample([[1.0, 2.0]])
    with pytest.raises(ValueError):
        as_sample([1.0])
    with pytest.raises(ValueError):
        as_sample([1.0, np.nan])
    with pytest.raises(ValueError):
        as_sample([1.0, np.inf])


def test_check_block_size_bounds():
    assert check_block_size(10, 5) == 5
    for bad in (1, 6, 0, -2):
        with pytest.raises(ValueError):
            check_block_size(10, bad)
