from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefolio.simplex import (
    LOG_LOWER,
    LOG_UPPER,
    Portfolio,
    SearchPoint,
    from_simplex,
    to_simplex,
    uniform_log_points,
)


def test_uniform_point_maps_to_equal_weights():
    p = SearchPoint.from_coords([1.0, 1.0, 1.0, 1.0])
    np.testing.assert_allclose(to_simplex(p).weights, 0.2, rtol=0, atol=1e-15)


def test_extreme_point_matches_exact_rational_oracle():
    # independent oracle: exact rational arithmetic on the defining formula
    coords = [Fraction(1000), Fraction(1, 1000), Fraction(1, 1000), Fraction(1, 1000)]
    denom = 1 + sum(coords)
    assert denom == Fraction(1001003, 1000)
    expected = [float(c / denom) for c in coords] + [float(Fraction(1) / denom)]

    got = to_simplex(SearchPoint.from_coords([1e3, 1e-3, 1e-3, 1e-3])).weights
    np.testing.assert_allclose(got, expected, rtol=1e-14)
    assert got[0] == pytest.approx(0.99900, abs=1e-5)
    assert got[1] == pytest.approx(9.99e-7, rel=1e-3)
    assert got[4] == pytest.approx(9.99e-4, rel=1e-3)


def test_round_trip_identity(rng):
    pts = uniform_log_points(rng, 500)
    for row in pts:
        p = SearchPoint(row)
        back = from_simplex(to_simplex(p))
        np.testing.assert_allclose(back.log_coords, p.log_coords, rtol=0, atol=1e-10)


def test_from_simplex_uniform():
    x = Portfolio(np.full(5, 0.2))
    np.testing.assert_allclose(from_simplex(x).coords, 1.0, rtol=1e-12)


def test_from_simplex_direct_ratio():
    x = Portfolio(np.array([0.5, 0.125, 0.125, 0.125, 0.125]))
    np.testing.assert_allclose(from_simplex(x).coords, [4.0, 1.0, 1.0, 1.0], rtol=1e-12)


def test_from_simplex_out_of_box():
    w = np.array([0.4, 0.3, 0.2, 0.1 - 1e-9, 1e-9])
    w = w / w.sum()
    with pytest.raises(ValueError, match="not representable"):
        from_simplex(Portfolio(w))


def test_search_point_validation():
    with pytest.raises(ValueError):
        SearchPoint(np.array([0.0, 0.0, 0.0, 3.1]))
    with pytest.raises(ValueError):
        SearchPoint.from_coords([1.0, -1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        SearchPoint(np.array([]))


def test_portfolio_validation():
    with pytest.raises(ValueError, match="positive"):
        Portfolio(np.array([0.5, 0.5, 0.0, 0.0, 0.0]))
    with pytest.raises(ValueError, match="sum to 1"):
        Portfolio(np.array([0.5, 0.2, 0.1, 0.1, 0.2]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(LOG_LOWER, LOG_UPPER), min_size=4, max_size=4))
def test_simplex_invariants_property(log_coords):
    w = to_simplex(SearchPoint(np.array(log_coords))).weights
    assert abs(w.sum() - 1.0) <= 1e-12
    assert np.all(w > 0)


def test_monotone_per_coordinate():
    base = SearchPoint(np.array([0.1, -0.5, 0.3, 1.0]))
    w0 = to_simplex(base).weights
    for k in range(4):
        bumped = base.log_coords.copy()
        bumped[k] += 0.2
        w1 = to_simplex(SearchPoint(bumped)).weights
        assert w1[k] > w0[k]


def test_json_round_trip():
    p = SearchPoint(np.array([-1.5, 0.25, 2.0, -3.0]))
    assert np.array_equal(SearchPoint.from_json(p.to_json("log")).log_coords, p.log_coords)
    raw = SearchPoint.from_json(p.to_json("raw"))
    np.testing.assert_allclose(raw.log_coords, p.log_coords, atol=1e-12)

    x = to_simplex(p)
    assert np.array_equal(Portfolio.from_json(x.to_json()).weights, x.weights)
