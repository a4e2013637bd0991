import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dls_incentives.exceptions import InputError
from dls_incentives.learning import (enforce_diminishing, evaluate_candidate, propose_candidate, random_search,
                                     realized_profit_by_epoch)
from dls_incentives.model import Cluster, DeferrablePulse, IncentiveMenu, Task, UniformPrior, validate_diminishing, \
    RiskModel
from dls_incentives.optimizer import expected_profit
from dls_incentives.simulation import PopulationSpec, generate_population
from dls_incentives.utility import UtilityTable

CLUSTER = Cluster(1, 2, DeferrablePulse((1.0,)))
U = UtilityTable.from_modes([[1.0, 2.0]])


def fixed_population(spec, prior, modes, seed):
    pop = generate_population(spec, prior, modes, np.random.default_rng(seed))
    return lambda rng: pop


def test_evaluate_examples():
    menu = IncentiveMenu(np.array([[0.5, 0.8]]))
    rng = np.random.default_rng(0)
    assert evaluate_candidate(menu, [Task(0, 1, 0, 0.0, 2)], U, CLUSTER, rng) == pytest.approx(1.2)
    assert evaluate_candidate(IncentiveMenu.zeros(1, 2), [Task(0, 1, 0, 0.1, 2)], U, CLUSTER, rng) == 0
    assert evaluate_candidate(menu, [], U, CLUSTER, rng) == 0


def test_profit_by_epoch_sums_to_total():
    u = UtilityTable.from_modes(np.random.default_rng(1).uniform(0, 1, (6, 2)))
    menu = IncentiveMenu(np.full((6, 2), 0.2))
    pop = generate_population(PopulationSpec(200, 6, 1, 2), UniformPrior(0.5), 2, np.random.default_rng(2))
    by_epoch = realized_profit_by_epoch(menu, pop, u, CLUSTER, np.random.default_rng(3))
    total = evaluate_candidate(menu, pop, u, CLUSTER, np.random.default_rng(3))
    assert by_epoch.shape == (6,) and by_epoch.sum() == pytest.approx(total)


def test_candidate_examples():
    assert not propose_candidate(np.random.default_rng(0), np.zeros((3, 2))).values.any()
    a = propose_candidate(np.random.default_rng(5), np.ones((3, 2)))
    b = propose_candidate(np.random.default_rng(5), np.ones((3, 2)))
    np.testing.assert_array_equal(a.values, b.values)
    rng = np.random.default_rng(6)
    for _ in range(1000):
        assert validate_diminishing(propose_candidate(rng, np.ones((2, 2))))
    with pytest.raises(InputError):
        propose_candidate(rng, -np.ones((1, 1)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.integers(1, 5))
def test_clipping_only_lowers_and_stays_in_envelope(seed, horizon, modes):
    rng = np.random.default_rng(seed)
    envelope = rng.uniform(0, 2, (horizon, modes))
    raw = rng.random(envelope.shape) * envelope
    clipped = enforce_diminishing(raw)
    assert np.all(clipped <= raw) and np.all(clipped >= 0)
    assert validate_diminishing(IncentiveMenu(clipped))


def test_search_single_day_and_guard():
    gen = fixed_population(PopulationSpec(50, 1, 2, 2), UniformPrior(1.0), 2, 0)
    run = random_search(1, gen, U, CLUSTER, np.random.default_rng(1))
    assert run.days == 1 and len(run.history) == 1
    assert run.best_menu is run.history[0][1]
    assert run.incumbent_at(1) is run.best_menu
    with pytest.raises(InputError):
        random_search(0, gen, U, CLUSTER, np.random.default_rng(1))


def test_search_is_deterministic_and_monotone():
    u = UtilityTable.from_modes(np.random.default_rng(2).uniform(0, 1, (4, 2)))
    spec = PopulationSpec(100, 4, 1, 2)

    def daily(rng):
        return generate_population(spec, UniformPrior(0.5), 2, rng)

    a = random_search(200, daily, u, CLUSTER, np.random.default_rng(9))
    b = random_search(200, daily, u, CLUSTER, np.random.default_rng(9))
    np.testing.assert_array_equal(a.profit_trajectory, b.profit_trajectory)
    np.testing.assert_array_equal(a.best_menu.values, b.best_menu.values)
    assert np.all(np.diff(a.profit_trajectory) >= 0)
    assert a.profit_at(200) >= a.profit_at(30)
    days = [d for d, _, _ in a.history]
    assert days == sorted(days) and days[0] == 1
    assert a.incumbent_at(days[-1]) is a.best_menu


def test_paired_mode_runs():
    gen = fixed_population(PopulationSpec(80, 2, 1, 2), UniformPrior(0.5), 2, 4)
    u = UtilityTable.from_modes([[0.3, 0.6], [0.2, 0.5]])
    run = random_search(50, gen, u, CLUSTER, np.random.default_rng(0), paired=True)
    assert run.paired and run.profit_trajectory.size == 50


def test_zero_envelope_learns_nothing():
    gen = fixed_population(PopulationSpec(50, 1, 2, 2), UniformPrior(1.0), 2, 0)
    run = random_search(20, gen, U, CLUSTER, np.random.default_rng(1), envelope=np.zeros((1, 2)))
    assert not run.best_menu.values.any() and not run.profit_trajectory.any()


def test_realized_profit_is_unbiased():
    menu = IncentiveMenu(np.array([[0.3, 0.5]]))
    risk = RiskModel(UniformPrior(0.8), np.array([1.0, 2.0]))
    expected = expected_profit(menu, U, risk).total
    spec = PopulationSpec(400, 1, 2, 2)
    rng = np.random.default_rng(21)
    per_task = [evaluate_candidate(menu, generate_population(spec, risk.prior, 2, rng), U, CLUSTER, rng) / 400
                for _ in range(200)]
    sem = np.std(per_task, ddof=1) / np.sqrt(len(per_task))
    assert abs(np.mean(per_task) - expected) <= 3 * sem
