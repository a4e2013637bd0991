import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dls_incentives.exceptions import ParseError
from dls_incentives.io import (fmt, load_ambient, load_charge_events, load_menu, load_prices, read_table, write_json,
                               write_menu, write_prices, write_utilities)
from dls_incentives.model import IncentiveMenu
from dls_incentives.pricing import PriceSeries
from dls_incentives.utility import UtilityTable


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_charge_events_examples(tmp_path):
    events = load_charge_events(write(tmp_path, "e.csv", "arrival,duration,laxity,cluster\n10,4,6,1\n"))
    assert len(events) == 1
    ev = events[0]
    assert (ev.arrival_epoch, ev.duration_epochs, ev.max_feasible_mode, ev.cluster) == (10, 4, 6, 1)
    assert load_charge_events(write(tmp_path, "h.csv", "arrival,duration,laxity,cluster\n")) == []
    with pytest.raises(ParseError) as err:
        load_charge_events(write(tmp_path, "n.csv", "arrival,duration,laxity,cluster\n10,4,-1,1\n"))
    assert err.value.line == 2


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("arrival,duration,cluster\n1,2,3\n", 1),
    ("arrival,duration,laxity,cluster\n1,2,3,1\n4,x,1,1\n", 3),
    ("arrival,duration,laxity,cluster\n1,2,3\n", 2),
    ("arrival,duration,laxity,cluster\n1,0,3,1\n", 2),
])
def test_charge_event_errors_carry_line(tmp_path, text, line):
    with pytest.raises(ParseError) as err:
        load_charge_events(write(tmp_path, "bad.csv", text))
    assert err.value.line == line
    assert f":{line}:" in str(err.value)


def test_price_examples(tmp_path):
    series = load_prices(write(tmp_path, "p.csv", "hour,price\n0,31.2\n1,28.9\n"))
    np.testing.assert_array_equal(series.hourly, [31.2, 28.9])
    assert series.base_load is None
    with pytest.raises(ParseError, match="missing hour 1"):
        load_prices(write(tmp_path, "g.csv", "hour,price\n0,1\n2,1\n"))
    loaded = load_prices(write(tmp_path, "b.csv", "hour,price,base_load\n0,1,500\n1,2,600\n"), scale=0.001)
    np.testing.assert_allclose(loaded.hourly, [0.001, 0.002])
    np.testing.assert_array_equal(loaded.base_load, [500, 600])
    with pytest.raises(ParseError):
        load_prices(write(tmp_path, "e.csv", "hour,price\n"))
    with pytest.raises(ParseError):
        load_prices(write(tmp_path, "n.csv", "hour,price\n0,nan\n"))


def test_ambient(tmp_path):
    np.testing.assert_array_equal(load_ambient(write(tmp_path, "a.csv", "epoch,ambient\n0,1.5\n1,2\n")), [1.5, 2])
    with pytest.raises(ParseError, match="missing epoch 0"):
        load_ambient(write(tmp_path, "b.csv", "epoch,ambient\n1,2\n"))


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=1, max_size=30), st.booleans())
def test_price_round_trip(tmp_path_factory, values, with_load):
    path = tmp_path_factory.mktemp("p") / "prices.csv"
    series = PriceSeries(values, np.abs(values) if with_load else None)
    write_prices(series, path)
    back = load_prices(path)
    np.testing.assert_array_equal(back.hourly, series.hourly)
    if with_load:
        np.testing.assert_array_equal(back.base_load, series.base_load)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_menu_round_trip(tmp_path_factory, horizon, modes, seed):
    values = np.random.default_rng(seed).uniform(0, 1, (horizon, modes)) ** 7
    path = tmp_path_factory.mktemp("m") / "menu.csv"
    write_menu(IncentiveMenu(values), path)
    np.testing.assert_array_equal(load_menu(path).values, values)


def test_menu_errors(tmp_path):
    with pytest.raises(ParseError):
        load_menu(write(tmp_path, "a.csv", "t,m1\n0,1\n"))
    with pytest.raises(ParseError):
        load_menu(write(tmp_path, "b.csv", "epoch,m2\n0,1\n"))
    with pytest.raises(ParseError, match="missing epoch 1"):
        load_menu(write(tmp_path, "c.csv", "epoch,m1\n0,1\n2,1\n"))
    with pytest.raises(ParseError):
        load_menu(write(tmp_path, "d.csv", "epoch,m1\n0,-1\n"))


def test_fmt_precision():
    assert fmt(0.1) == "0.1" and fmt(np.int64(3)) == "3" and fmt(True) == "1"
    x = 1 / 3
    assert float(fmt(x)) == x and len(fmt(x).replace("0.", "")) >= 12


def test_utilities_and_json(tmp_path):
    table = UtilityTable(np.array([[0.0, 1.0, 2.0]]), np.array([[False, False, True]]))
    write_utilities(table, tmp_path / "u.csv")
    header, rows = read_table(tmp_path / "u.csv")
    assert header == ["epoch", "m1", "m2", "f1", "f2"] and rows == [["0", "1.0", "2.0", "0", "1"]]
    write_json(tmp_path / "x.json", {"b": np.float64(1.5), "a": np.arange(2)})
    assert (tmp_path / "x.json").read_text() == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": 1.5\n}\n'
    assert (tmp_path / "u.csv").read_bytes().count(b"\r") == 0
