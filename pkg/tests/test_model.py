import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dls_incentives.exceptions import InputError
from dls_incentives.model import (Cluster, ChoiceDistribution, DeferrablePulse, IncentiveMenu, RiskModel, Task,
                                  TCLParams, TimeGrid, UniformPrior, Violation, adjacent_ratios,
                                  validate_diminishing, validate_single_crossing)


def cluster(modes, risk=None):
    return Cluster(1, modes, DeferrablePulse((1.0,)), risk)


def test_time_grid_hour_mapping():
    grid = TimeGrid(2, 48)
    assert grid.epoch_duration_hours == 0.5
    assert [grid.hour_of(j) for j in range(5)] == [0, 0, 1, 1, 2]
    assert grid.contains(47) and not grid.contains(48) and not grid.contains(-1)


@pytest.mark.parametrize("s,t", [(0, 48), (2, 0), (1.5, 4)])
def test_time_grid_rejects_bad_sizes(s, t):
    with pytest.raises(InputError):
        TimeGrid(s, t)


def test_cluster_default_risk_is_mode_index():
    c = cluster(4)
    np.testing.assert_array_equal(c.risk(), [1, 2, 3, 4])
    assert c.kind == "deferrable"
    with pytest.raises(ValueError):
        c.risk_shape[0] = 5.0


def test_cluster_rejects_non_increasing_risk():
    with pytest.raises(InputError):
        cluster(3, np.array([1.0, 1.0, 2.0]))
    with pytest.raises(InputError):
        cluster(2, np.array([0.0, 1.0]))
    with pytest.raises(InputError):
        cluster(2, np.array([1.0, 2.0, 3.0]))


def test_time_varying_risk_rows():
    risk = np.array([[1.0, 2.0], [0.5, 3.0]])
    c = cluster(2, risk)
    np.testing.assert_array_equal(c.risk(1), [0.5, 3.0])


def test_pulse_and_tcl_guards():
    assert DeferrablePulse((1.1, 1.1)).length_epochs == 2
    with pytest.raises(InputError):
        DeferrablePulse(())
    with pytest.raises(InputError):
        DeferrablePulse((1.0, -0.1))
    with pytest.raises(InputError):
        TCLParams(0.0, 10.0, 1.0, 10.0, 15.0)
    with pytest.raises(InputError):
        TCLParams(0.5, 10.0, 1.0, 15.0, 15.0)
    assert cluster(1).kind == "deferrable"
    assert Cluster(2, 1, TCLParams(0.5, 10.0, 1.0, 10.0, 15.0)).kind == "tcl"


def test_menu_guards():
    assert IncentiveMenu.zeros(3, 2).values.shape == (3, 2)
    with pytest.raises(InputError):
        IncentiveMenu(np.array([[-0.1]]))
    with pytest.raises(InputError):
        IncentiveMenu(np.array([[np.nan]]))


def test_diminishing_examples():
    ok = IncentiveMenu(np.array([[1.0, 2.0], [1.5, 1.8]]))
    assert validate_diminishing(ok)
    bad = IncentiveMenu(np.array([[1.0, 1.2], [1.5, 1.8]]))
    res = validate_diminishing(bad)
    assert not res and res.violations == [Violation(1, 1)]
    assert validate_diminishing(IncentiveMenu(np.array([[5.0, 0.1, 3.0]])))


def test_diminishing_grid_mismatch():
    with pytest.raises(InputError):
        validate_diminishing(IncentiveMenu.zeros(3, 2), TimeGrid(2, 4))


def test_single_crossing_examples():
    c = cluster(2)
    np.testing.assert_allclose(adjacent_ratios([0.5, 0.8], [1.0, 2.0]), [0.5, 0.3, 0.0])
    assert validate_single_crossing(IncentiveMenu(np.array([[0.5, 0.8]])), c)
    res = validate_single_crossing(IncentiveMenu(np.array([[0.3, 0.8]])), c)
    assert not res and res.violations == [Violation(0, 1)]
    assert validate_single_crossing(IncentiveMenu.zeros(2, 2), c)


def test_single_crossing_top_mode_against_dummy():
    # A decreasing top incentive makes the dummy ratio exceed the last one.
    res = validate_single_crossing(IncentiveMenu(np.array([[0.5, 0.4]])), cluster(2))
    assert Violation(0, 2) in res.violations


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.floats(0.1, 10.0), st.integers(0, 2**31 - 1))
def test_single_crossing_invariant_under_joint_scaling(modes, scale, seed):
    rng = np.random.default_rng(seed)
    risk = np.cumsum(rng.uniform(0.1, 2.0, modes))
    values = rng.uniform(0.0, 3.0, (2, modes))
    plain = validate_single_crossing(IncentiveMenu(values), cluster(modes, risk))
    scaled = validate_single_crossing(IncentiveMenu(values * scale), cluster(modes, risk * scale), tol=1e-12 * scale)
    assert bool(plain) == bool(scaled)


def test_uniform_prior():
    prior = UniformPrior(2.0)
    np.testing.assert_allclose(prior.cdf([-1.0, 0.0, 1.0, 3.0]), [0.0, 0.0, 0.5, 1.0])
    draws = prior.sample(np.random.default_rng(0), 1000)
    assert draws.min() >= 0 and draws.max() <= 2.0
    with pytest.raises(InputError):
        UniformPrior(0.0)


def test_distribution_prior_adapter():
    from scipy import stats

    from dls_incentives.model import DistributionPrior
    prior = DistributionPrior(stats.expon(scale=0.5))
    assert prior.cdf(-1.0) == 0.0
    assert prior.cdf(0.5) == pytest.approx(1 - np.exp(-1))
    with pytest.raises(InputError):
        DistributionPrior(stats.norm())


def test_risk_model_for_cluster():
    rm = RiskModel.for_cluster(cluster(3), UniformPrior(1.0))
    assert rm.mode_count == 3
    np.testing.assert_array_equal(rm.risk(5), [1, 2, 3])


def test_task_and_choice_distribution_guards():
    with pytest.raises(InputError):
        Task(0, 1, -1, 0.1, 2)
    with pytest.raises(InputError):
        Task(0, 1, 0, -0.1, 2)
    dist = ChoiceDistribution(np.array([0.5, 0.5]))
    assert dist[1] == 0.5 and len(dist) == 2
    with pytest.raises(InputError):
        ChoiceDistribution(np.array([0.5, 0.6]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=6))
def test_choice_distribution_normalised(weights):
    w = np.asarray(weights) + 1e-3
    dist = ChoiceDistribution(w / w.sum())
    assert abs(dist.probabilities.sum() - 1) <= 1e-9
