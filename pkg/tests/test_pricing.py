import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dls_incentives.exceptions import InputError
from dls_incentives.model import TimeGrid
from dls_incentives.pricing import PriceSeries, PriceShape, expand_prices, hourly_cost, synth_prices

hourly_vectors = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=12)


@pytest.mark.parametrize("s,hourly,expected", [
    (2, [10, 20], [5, 5, 10, 10]),
    (1, [7], [7]),
    (4, [8, 0], [2, 2, 2, 2, 0, 0, 0, 0]),
])
def test_expand_examples(s, hourly, expected):
    out = expand_prices(PriceSeries(hourly), TimeGrid(s, len(expected)))
    np.testing.assert_array_equal(out.values, expected)
    assert out.epochs_per_hour == s


def test_price_series_guards():
    with pytest.raises(InputError):
        PriceSeries([])
    with pytest.raises(InputError):
        PriceSeries([1.0, np.inf])
    with pytest.raises(InputError):
        PriceSeries([1.0, 2.0], base_load=[1.0])
    assert PriceSeries([1.0], base_load=[3.0]).hours == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), hourly_vectors)
def test_hour_conservation(s, hourly):
    out = expand_prices(PriceSeries(hourly), TimeGrid(s, 1))
    assert out.values.size == len(hourly) * s
    np.testing.assert_allclose(out.values.reshape(-1, s).sum(axis=1), hourly, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.floats(-5, 5), st.floats(-5, 5), st.integers(1, 10), st.integers(0, 2**31 - 1))
def test_expand_is_linear(s, a, b, hours, seed):
    rng = np.random.default_rng(seed)
    p, r = rng.normal(size=hours), rng.normal(size=hours)
    grid = TimeGrid(s, 1)
    lhs = expand_prices(PriceSeries(a * p + b * r), grid).values
    rhs = a * expand_prices(PriceSeries(p), grid).values + b * expand_prices(PriceSeries(r), grid).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 17, 12345])
def test_synth_bounds(seed):
    series = synth_prices(PriceShape(peak_level=50, offpeak_level=20, hours=24), seed)
    assert series.hours == 24
    assert np.all(series.hourly >= 20 * 0.9) and np.all(series.hourly <= 50 * 1.1)


def test_synth_noiseless_has_two_levels():
    series = synth_prices(PriceShape(peak_level=50, offpeak_level=20, hours=48, noise=0.0), 3)
    assert set(series.hourly.tolist()) == {20.0, 50.0}
    # the peak block is centred on peak_hour
    peak = np.nonzero(series.hourly[:24] == 50)[0]
    assert peak.tolist() == [15, 16, 17, 18, 19, 20]


def test_synth_deterministic_and_seed_sensitive():
    shape = PriceShape()
    np.testing.assert_array_equal(synth_prices(shape, 9).hourly, synth_prices(shape, 9).hourly)
    assert not np.array_equal(synth_prices(shape, 9).hourly, synth_prices(shape, 10).hourly)


@pytest.mark.parametrize("shape", [
    PriceShape(hours=0), PriceShape(peak_level=1.0, offpeak_level=2.0), PriceShape(noise=1.0),
])
def test_synth_guards(shape):
    with pytest.raises(InputError):
        synth_prices(shape, 0)


def test_hourly_cost():
    assert hourly_cost(PriceSeries([2.0, 3.0, 4.0]), [1.0, 0.5]) == 3.5
