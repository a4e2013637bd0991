"""Task populations, day simulation against a posted menu, and welfare accounting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .choice import decide_modes
from .exceptions import InputError
from .model import Cluster, IncentiveMenu, Task
from .utility import UtilityTable


@dataclass(frozen=True)
class Population:
    """Columnar view of a list of tasks (one cluster or several)."""

    ids: np.ndarray
    cluster: np.ndarray
    arrival: np.ndarray
    gamma: np.ndarray
    cap: np.ndarray

    def __post_init__(self):
        n = len(self.ids)
        for name in ("cluster", "arrival", "gamma", "cap"):
            if len(getattr(self, name)) != n:
                raise InputError(f"population column {name} has the wrong length")
        if n and (np.any(self.gamma < 0) or np.any(self.cap < 0)):
            raise InputError("task types and caps must be >= 0")

    @classmethod
    def from_tasks(cls, tasks: Iterable[Task]) -> "Population":
        tasks = list(tasks)
        return cls(
            ids=np.array([t.id for t in tasks], dtype=int),
            cluster=np.array([t.cluster for t in tasks], dtype=int),
            arrival=np.array([t.arrival_epoch for t in tasks], dtype=int),
            gamma=np.array([t.true_type for t in tasks], dtype=float),
            cap=np.array([t.max_feasible_mode for t in tasks], dtype=int),
        )

    def tasks(self) -> list[Task]:
        return [Task(int(i), int(q), int(a), float(g), int(c))
                for i, q, a, g, c in zip(self.ids, self.cluster, self.arrival, self.gamma, self.cap)]

    def select(self, mask) -> "Population":
        return Population(self.ids[mask], self.cluster[mask], self.arrival[mask], self.gamma[mask], self.cap[mask])

    def __len__(self):
        return len(self.ids)


def as_population(tasks) -> Population:
    return tasks if isinstance(tasks, Population) else Population.from_tasks(tasks)


@dataclass(frozen=True)
class PopulationSpec:
    """Synthetic arrivals: ``tasks`` events spread over the horizon by ``intensity``.

    Given the total count, a Poisson process with epoch intensities
    proportional to ``intensity`` places each arrival independently.
    ``intensity=None`` is flat. Laxities are uniform integers in
    ``[laxity_min, laxity_max]`` and cap the feasible mode.
    """

    tasks: int = 500
    horizon: int = 48
    laxity_min: int = 1
    laxity_max: int = 8
    intensity: Optional[tuple] = None
    cluster: int = 1

    def __post_init__(self):
        if self.tasks < 0 or self.horizon < 1:
            raise InputError("need tasks >= 0 and horizon >= 1")
        if not 0 <= self.laxity_min <= self.laxity_max:
            raise InputError("need 0 <= laxity_min <= laxity_max")
        if self.intensity is not None and len(self.intensity) != self.horizon:
            raise InputError("intensity must give one weight per epoch")


def generate_population(spec: PopulationSpec, prior, mode_count: int, rng: np.random.Generator,
                        first_id: int = 0) -> Population:
    """Draw arrivals, laxities and private types for one day."""
    if spec.intensity is None:
        weights = np.full(spec.horizon, 1.0 / spec.horizon)
    else:
        weights = np.asarray(spec.intensity, dtype=float)
        if np.any(weights < 0) or weights.sum() <= 0:
            raise InputError("intensity weights must be >= 0 with a positive sum")
        weights = weights / weights.sum()
    arrival = np.sort(rng.choice(spec.horizon, size=spec.tasks, p=weights))
    laxity = rng.integers(spec.laxity_min, spec.laxity_max + 1, size=spec.tasks)
    gamma = np.asarray(prior.sample(rng, spec.tasks), dtype=float)
    return Population(
        ids=np.arange(first_id, first_id + spec.tasks),
        cluster=np.full(spec.tasks, spec.cluster, dtype=int),
        arrival=arrival.astype(int),
        gamma=gamma,
        cap=np.minimum(laxity, mode_count).astype(int),
    )


def population_from_events(events: Sequence, gammas, mode_count: int) -> Population:
    """Tasks from recorded charge events and per-event types."""
    gammas = np.asarray(gammas, dtype=float)
    if len(events) != gammas.size:
        raise InputError("need one type per event")
    return Population(
        ids=np.arange(len(events)),
        cluster=np.array([e.cluster for e in events], dtype=int),
        arrival=np.array([e.arrival_epoch for e in events], dtype=int),
        gamma=gammas,
        cap=np.minimum([e.max_feasible_mode for e in events], mode_count).astype(int),
    )


def _risk_rows(cluster: Cluster, arrival: np.ndarray) -> np.ndarray:
    if cluster.risk_shape.ndim == 1:
        return np.broadcast_to(cluster.risk_shape, (arrival.size, cluster.mode_count))
    return cluster.risk_shape[arrival]


def in_horizon(pop: Population, menu: IncentiveMenu) -> np.ndarray:
    return (pop.arrival >= 0) & (pop.arrival < menu.horizon)


def decide_population(menu: IncentiveMenu, pop: Population, cluster: Cluster,
                      rng: np.random.Generator) -> np.ndarray:
    """Each task's chosen mode when offered the menu row of its arrival epoch."""
    if len(pop) == 0:
        return np.zeros(0, dtype=int)
    rows = menu.values[pop.arrival]
    return decide_modes(pop.gamma, rows, _risk_rows(cluster, pop.arrival), np.minimum(pop.cap, cluster.mode_count), rng)


@dataclass(frozen=True)
class RecruitmentLedger:
    """One row per decided task, stored column-wise.

    ``net_revenue + saving == utility - risk`` on every row; non-participants
    have all money columns at zero. ``benchmark`` is the utility the task
    would yield at its full feasible laxity, counted from the epoch it decided.
    """

    task_id: np.ndarray
    cluster: np.ndarray
    arrival: np.ndarray
    decided: np.ndarray
    mode: np.ndarray
    incentive: np.ndarray
    risk: np.ndarray
    utility: np.ndarray
    net_revenue: np.ndarray
    saving: np.ndarray
    benchmark: np.ndarray
    skipped: tuple = ()

    COLUMNS = ("task_id", "cluster", "arrival", "decided", "mode", "incentive", "risk",
               "utility", "net_revenue", "saving", "benchmark")

    def __len__(self):
        return len(self.task_id)

    @classmethod
    def concat(cls, ledgers: Sequence["RecruitmentLedger"]) -> "RecruitmentLedger":
        cols = {c: np.concatenate([getattr(l, c) for l in ledgers]) if ledgers else np.zeros(0)
                for c in cls.COLUMNS}
        skipped = tuple(s for l in ledgers for s in l.skipped)
        return cls(**cols, skipped=skipped)

    def rows(self):
        for i in range(len(self)):
            yield {c: getattr(self, c)[i].item() for c in self.COLUMNS}


def simulate_day(menu: IncentiveMenu, tasks, utilities: UtilityTable, cluster: Cluster,
                 rng: np.random.Generator, reoffer: bool = False) -> RecruitmentLedger:
    """Offer the menu to each task at arrival and book the outcome.

    Tasks arriving outside the menu horizon are skipped and listed in
    ``skipped``. With ``reoffer=True`` a task that declines is offered the
    next epoch's row again with one less unit of laxity, until its laxity is
    exhausted or the horizon ends. A task recruited on a re-offer is
    benchmarked from that state: the decision epoch and its remaining laxity.
    """
    pop = as_population(tasks)
    ok = in_horizon(pop, menu)
    skipped = tuple(int(i) for i in pop.ids[~ok])
    pop = pop.select(ok)
    arrival = pop.arrival
    cap = np.minimum(pop.cap, cluster.mode_count)
    modes = decide_population(menu, pop, cluster, rng)
    decided = arrival.copy()
    if reoffer:
        waiting = modes == 0
        cur_cap = cap.copy()
        cur_t = arrival.copy()
        while True:
            cur_t = cur_t + 1
            cur_cap = cur_cap - 1
            waiting &= (cur_cap >= 1) & (cur_t < menu.horizon)
            if not waiting.any():
                break
            idx = np.nonzero(waiting)[0]
            sub = Population(pop.ids[idx], pop.cluster[idx], cur_t[idx], pop.gamma[idx], cur_cap[idx])
            again = decide_population(menu, sub, cluster, rng)
            took = again > 0
            modes[idx[took]] = again[took]
            decided[idx[took]] = cur_t[idx[took]]
            waiting[idx[took]] = False

    n = len(pop)
    part = modes > 0
    incentive = np.zeros(n)
    risk = np.zeros(n)
    utility = np.zeros(n)
    if part.any():
        j = modes[part] - 1
        incentive[part] = menu.values[decided[part], j]
        risk[part] = pop.gamma[part] * _risk_rows(cluster, decided[part])[np.arange(j.size), j]
        utility[part] = utilities.values[decided[part], modes[part]]
    benchmark = utilities.values[decided, cap - (decided - arrival)]
    return RecruitmentLedger(
        task_id=pop.ids.copy(), cluster=pop.cluster.copy(), arrival=arrival.copy(), decided=decided,
        mode=modes, incentive=incentive, risk=risk, utility=utility,
        net_revenue=utility - incentive, saving=incentive - risk, benchmark=benchmark,
        skipped=skipped,
    )


@dataclass(frozen=True)
class WelfareReport:
    """Per-bin and total aggregates of a ledger, binned by arrival epoch."""

    bins: np.ndarray
    profit: np.ndarray
    savings: np.ndarray
    welfare: np.ndarray
    benchmark: np.ndarray
    participants: np.ndarray
    tasks: np.ndarray

    @property
    def totals(self) -> dict:
        return {
            "aggregator_profit": float(self.profit.sum()),
            "consumer_savings": float(self.savings.sum()),
            "dls_welfare": float(self.welfare.sum()),
            "dynamic_pricing_benchmark": float(self.benchmark.sum()),
            "participants": int(self.participants.sum()),
            "tasks": int(self.tasks.sum()),
        }


def welfare_report(ledger: RecruitmentLedger, horizon: Optional[int] = None, bin_width: int = 1) -> WelfareReport:
    """Aggregator profit, consumer savings, their sum and the frictionless benchmark.

    The benchmark is the total utility the tasks would yield under full use
    of their laxity with no commitment risk.
    """
    if bin_width < 1:
        raise InputError("bin_width must be >= 1")
    if horizon is None:
        horizon = int(ledger.arrival.max()) + 1 if len(ledger) else 0
    nbins = -(-horizon // bin_width) if horizon else 0
    which = ledger.arrival // bin_width

    def binned(values):
        return np.bincount(which, weights=values, minlength=nbins)[:nbins] if len(ledger) else np.zeros(nbins)

    welfare = ledger.utility - ledger.risk
    return WelfareReport(
        bins=np.arange(nbins) * bin_width,
        profit=binned(ledger.net_revenue),
        savings=binned(ledger.saving),
        welfare=binned(welfare),
        benchmark=binned(ledger.benchmark),
        participants=binned((ledger.mode > 0).astype(float)),
        tasks=binned(np.ones(len(ledger))),
    )
