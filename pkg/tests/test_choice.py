from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dls_incentives.choice import (adjacent_bounds, calibrate_types, choice_bounds, choice_probabilities,
                                   decide_mode, decide_modes, monte_carlo_choice)
from dls_incentives.exceptions import InputError
from dls_incentives.model import IncentiveMenu, RiskModel, UniformPrior

UNIT = RiskModel(UniformPrior(1.0), np.array([1.0, 2.0]))


def brute_argmax(gamma, incentives, risk):
    values = np.concatenate([[0.0], np.asarray(incentives) - gamma * np.asarray(risk)])
    return int(np.argmax(values))


def single_crossing_menu(rng, modes):
    """Random menu with non-increasing adjacent ratios under r(m)=m."""
    ratios = np.sort(rng.uniform(0, 1, modes))[::-1]
    return np.cumsum(ratios)


def test_decide_examples():
    assert decide_mode(0.2, [0.5, 0.8], [1, 2]) == 2
    assert decide_mode(0.6, [0.5, 0.8], [1, 2]) == 0
    assert decide_mode(0.2, [0.5, 0.8], [1, 2], cap=1) == 1
    assert decide_mode(0.3, [0.0, 0.0], [1, 2]) == 0


def test_zero_menu_zero_type_ties_uniformly():
    modes = decide_modes(np.zeros(30000), [0.0, 0.0, 0.0], [1, 2, 3], rng=np.random.default_rng(0))
    freq = np.bincount(modes, minlength=4) / modes.size
    np.testing.assert_allclose(freq, 0.25, atol=0.015)


def test_bounds_examples():
    assert choice_bounds([0.5, 0.8], [1, 2], 1) == pytest.approx((0.3, 0.5))
    assert choice_bounds([0.5, 0.8], [1, 2], 2) == pytest.approx((0.0, 0.3))
    b = choice_bounds([0.3, 0.8], [1, 2], 1)
    assert b == pytest.approx((0.5, 0.3)) and b.empty
    with pytest.raises(InputError):
        choice_bounds([0.5, 0.8], [1, 2], 0)


def test_probability_examples():
    np.testing.assert_allclose(choice_probabilities([0.5, 0.8], UNIT).probabilities, [0.5, 0.2, 0.3], atol=1e-12)
    np.testing.assert_array_equal(choice_probabilities([0.0, 0.0], UNIT).probabilities, [1, 0, 0])
    capped = choice_probabilities([0.5, 0.8], UNIT, cap=1).probabilities
    np.testing.assert_allclose(capped, [0.5, 0.5, 0.0])
    dominated = choice_probabilities([0.3, 0.8], UNIT).probabilities
    assert dominated[1] == 0


@pytest.mark.parametrize("modes", [1, 4, 8])
def test_full_participation_at_type_ceiling(modes):
    risk = RiskModel(UniformPrior(0.0721), np.arange(1.0, modes + 1))
    incentives = 0.0721 * np.arange(1.0, modes + 1)
    assert choice_probabilities(incentives, risk).probabilities[0] == 0


def test_monte_carlo_examples():
    mc = monte_carlo_choice([0.5, 0.8], UNIT, 100_000, np.random.default_rng(11))
    np.testing.assert_allclose(mc.probabilities, [0.5, 0.2, 0.3], atol=0.01)
    one = monte_carlo_choice([0.5, 0.8], UNIT, 1, np.random.default_rng(0)).probabilities
    assert sorted(one.tolist()) == [0.0, 0.0, 1.0]
    a = monte_carlo_choice([0.5, 0.8], UNIT, 5000, np.random.default_rng(4)).probabilities
    b = monte_carlo_choice([0.5, 0.8], UNIT, 5000, np.random.default_rng(4)).probabilities
    np.testing.assert_array_equal(a, b)
    with pytest.raises(InputError):
        monte_carlo_choice([0.5], UNIT, 0, np.random.default_rng(0))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_partition(seed, modes):
    rng = np.random.default_rng(seed)
    risk = RiskModel(UniformPrior(float(rng.uniform(0.05, 2))), np.cumsum(rng.uniform(0.1, 2, modes)))
    p = choice_probabilities(rng.uniform(0, 2, modes), risk).probabilities
    assert abs(p.sum() - 1) <= 1e-12 and np.all(p >= 0)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_analytic_matches_exact_type_scan(seed, modes):
    # Deterministic oracle: the chosen mode on a fine type grid integrates to the interval lengths.
    rng = np.random.default_rng(seed)
    r = np.cumsum(rng.uniform(0.2, 2, modes))
    incentives = rng.uniform(0, 1, modes)
    risk = RiskModel(UniformPrior(1.0), r)
    gammas = (np.arange(20000) + 0.5) / 20000
    chosen = np.array([brute_argmax(g, incentives, r) for g in gammas[::10]])
    freq = np.bincount(chosen, minlength=modes + 1) / chosen.size
    p = choice_probabilities(incentives, risk).probabilities
    np.testing.assert_allclose(freq, p, atol=2.5e-3 + 1e-3 * modes)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_adjacent_rule_equals_full_bounds_on_single_crossing(seed, modes):
    incentives = single_crossing_menu(np.random.default_rng(seed), modes)
    r = np.arange(1.0, modes + 1)
    for m in range(1, modes + 1):
        assert adjacent_bounds(incentives, r, m) == pytest.approx(choice_bounds(incentives, r, m), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.floats(0.1, 10))
def test_argmax_invariant_under_joint_scaling(seed, modes, scale):
    rng = np.random.default_rng(seed)
    r = np.cumsum(rng.uniform(0.1, 2, modes))
    incentives = rng.uniform(0, 2, modes)
    gammas = rng.uniform(0, 1, 50)
    a = decide_modes(gammas, incentives, r, rng=np.random.default_rng(1))
    b = decide_modes(gammas, incentives * scale, r * scale, rng=np.random.default_rng(1))
    np.testing.assert_array_equal(a, b)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_monotone_selection_on_single_crossing(seed, modes):
    incentives = single_crossing_menu(np.random.default_rng(seed), modes)
    gammas = np.linspace(0.001, 1.2, 400)
    chosen = decide_modes(gammas, incentives, np.arange(1.0, modes + 1), rng=np.random.default_rng(0))
    assert np.all(np.diff(chosen) <= 0)


def test_calibration_examples():
    menu = IncentiveMenu(np.array([[0.03, 0.06, 0.09, 0.12]]))
    cal = calibrate_types([SimpleNamespace(arrival_epoch=0, max_feasible_mode=2)], menu, np.arange(1.0, 5))
    assert cal.gammas[0] == pytest.approx(0.03) and cal.gamma_max == pytest.approx(0.03)
    same = [SimpleNamespace(arrival_epoch=0, max_feasible_mode=1)] * 5
    assert calibrate_types(same, menu, np.arange(1.0, 5)).gamma_max == pytest.approx(0.03)
    top = calibrate_types([SimpleNamespace(arrival_epoch=0, max_feasible_mode=4)], menu, np.arange(1.0, 5))
    assert top.gammas[0] == pytest.approx(0.12 / 5)
    with pytest.raises(InputError):
        calibrate_types([SimpleNamespace(arrival_epoch=3, max_feasible_mode=1)], menu, np.arange(1.0, 5))


def test_calibrated_type_is_indifferent_to_next_mode():
    menu = IncentiveMenu(np.array([[0.05, 0.07, 0.12]]))
    r = np.array([1.0, 2.0, 3.0])
    gamma = calibrate_types([SimpleNamespace(arrival_epoch=0, max_feasible_mode=1)], menu, r).gammas[0]
    assert gamma * r[1] == pytest.approx(menu.values[0, 1])
