"""Model-free baseline: random search over daily incentive profiles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import InputError
from .model import Cluster, IncentiveMenu
from .simulation import Population, as_population, decide_population, in_horizon
from .utility import UtilityTable


def enforce_diminishing(values: np.ndarray) -> np.ndarray:
    """Clip entries down, epoch by epoch, until ``I^t(m) <= I^{t-1}(m+1)`` holds."""
    out = np.array(values, dtype=float)
    for t in range(1, out.shape[0]):
        np.minimum(out[t, :-1], out[t - 1, 1:], out=out[t, :-1])
    return out


def propose_candidate(rng: np.random.Generator, envelope) -> IncentiveMenu:
    """Uniform random menu inside ``[0, envelope]``, clipped to diminishing payoffs.

    Single crossing is deliberately not imposed.
    """
    envelope = np.asarray(envelope, dtype=float)
    if np.any(envelope < 0):
        raise InputError("envelope must be >= 0")
    draw = rng.random(envelope.shape) * envelope
    return IncentiveMenu(enforce_diminishing(draw))


def realized_margins(menu: IncentiveMenu, tasks, utilities: UtilityTable, cluster: Cluster,
                     rng: np.random.Generator) -> tuple[Population, np.ndarray]:
    """Per-task ``U(m*) - I(m*)`` for tasks inside the horizon."""
    pop = as_population(tasks)
    pop = pop.select(in_horizon(pop, menu))
    modes = decide_population(menu, pop, cluster, rng)
    margin = np.zeros(len(pop))
    part = modes > 0
    if part.any():
        t = pop.arrival[part]
        m = modes[part]
        margin[part] = utilities.values[t, m] - menu.values[t, m - 1]
    return pop, margin


def evaluate_candidate(menu: IncentiveMenu, tasks, utilities: UtilityTable, cluster: Cluster,
                       rng: np.random.Generator) -> float:
    """Realized aggregator profit of posting ``menu`` to this population."""
    _, margin = realized_margins(menu, tasks, utilities, cluster, rng)
    return float(margin.sum())


def realized_profit_by_epoch(menu: IncentiveMenu, tasks, utilities: UtilityTable, cluster: Cluster,
                             rng: np.random.Generator) -> np.ndarray:
    pop, margin = realized_margins(menu, tasks, utilities, cluster, rng)
    return np.bincount(pop.arrival, weights=margin, minlength=menu.horizon)[:menu.horizon]


@dataclass
class LearningRun:
    """Outcome of a random search.

    ``profit_trajectory[d]`` is the recorded profit of the incumbent after day
    ``d + 1``; ``history`` lists ``(day, menu, profit)`` at each replacement.
    """

    best_menu: IncentiveMenu
    profit_trajectory: np.ndarray
    days: int
    seed: Optional[int] = None
    paired: bool = False
    history: list = field(default_factory=list)

    def incumbent_at(self, day: int) -> IncentiveMenu:
        """Incumbent menu after ``day`` days (1-based)."""
        if not 1 <= day <= self.days:
            raise InputError(f"day must lie in 1..{self.days}")
        best = None
        for d, menu, _ in self.history:
            if d > day:
                break
            best = menu
        return best

    def profit_at(self, day: int) -> float:
        return float(self.profit_trajectory[day - 1])


def random_search(days: int, population_generator: Callable, utilities: UtilityTable, cluster: Cluster,
                  rng: np.random.Generator, envelope=None, paired: bool = False,
                  seed: Optional[int] = None) -> LearningRun:
    """Try one random menu per day and keep the best one seen.

    ``population_generator(rng)`` returns that day's tasks; it may ignore the
    generator and return a fixed population. By default the candidate's
    realized profit is compared with the incumbent's recorded profit, and the
    incumbent is replaced only when strictly beaten, so the trajectory is
    non-decreasing. With ``paired=True`` both are evaluated on the same day's
    population and the trajectory records the incumbent's profit on that day.
    """
    if days < 1:
        raise InputError("days must be >= 1")
    if envelope is None:
        envelope = utilities.values[:, 1:]
    incumbent, best = None, -np.inf
    trajectory = np.empty(days)
    history = []
    for d in range(1, days + 1):
        tasks = population_generator(rng)
        candidate = propose_candidate(rng, envelope)
        score = evaluate_candidate(candidate, tasks, utilities, cluster, rng)
        if paired and incumbent is not None:
            best = evaluate_candidate(incumbent, tasks, utilities, cluster, rng)
        if incumbent is None or score > best:
            incumbent, best = candidate, score
            history.append((d, candidate, score))
        trajectory[d - 1] = best
    return LearningRun(incumbent, trajectory, days, seed, paired, history)
