"""Aggregator recruitment utilities for deferrable loads and TCL preheating."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import InfeasibleError, InputError
from .model import Cluster, DeferrablePulse, TCLParams, TimeGrid
from .pricing import SubHourlyPrices

# Temperatures within this distance of a threshold count as reaching it.
REACH_TOL = 1e-9
BINARY_MAX_EPOCHS = 16


@dataclass(frozen=True)
class UtilityTable:
    """``values[t, m]`` is U^t(m) for modes ``m = 0..M`` (column 0 is always 0).

    ``flags`` marks cells that could not be evaluated as requested (pulse or
    heating cycle running past the price horizon, unreachable comfort band).
    """

    values: np.ndarray
    flags: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        flags = np.array(self.flags, dtype=bool)
        if values.ndim != 2 or values.shape != flags.shape:
            raise InputError("utility values and flags must be matching 2-D tables")
        if np.any(values[:, 0] != 0):
            raise InputError("utility of mode 0 must be zero")
        values.setflags(write=False)
        flags.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "flags", flags)

    @classmethod
    def from_modes(cls, values) -> "UtilityTable":
        """Build from a (T, M) table of modes ``1..M``."""
        values = np.atleast_2d(np.asarray(values, dtype=float))
        full = np.concatenate([np.zeros((values.shape[0], 1)), values], axis=1)
        return cls(full, np.zeros(full.shape, dtype=bool))

    @property
    def horizon(self) -> int:
        return self.values.shape[0]

    @property
    def mode_count(self) -> int:
        return self.values.shape[1] - 1


class DeferrableUtility(NamedTuple):
    utility: float
    activation: int
    cost_no_control: float
    cost_best: float


def _price_values(prices) -> np.ndarray:
    if isinstance(prices, SubHourlyPrices):
        return prices.values
    return np.asarray(prices, dtype=float)


def shifted_cost(pulse: DeferrablePulse, alpha: int, prices) -> float:
    """Cost of running the pulse from activation epoch ``alpha``."""
    pi = _price_values(prices)
    g = pulse.pulse
    if alpha < 0 or alpha + len(g) > pi.size:
        raise InputError(f"pulse activated at {alpha} runs past the price horizon ({pi.size} epochs)")
    return math.fsum(pi[alpha + k] * g[k] for k in range(len(g)))


def deferrable_utility(pulse: DeferrablePulse, t: int, m: int, prices) -> DeferrableUtility:
    """Best activation within ``[t, t + m]`` versus starting at arrival.

    Ties between activation epochs go to the earliest one.
    """
    pi = _price_values(prices)
    if m < 0 or t < 0:
        raise InputError("epoch and mode must be >= 0")
    if t + m + pulse.length_epochs > pi.size:
        raise InputError(
            f"pulse of {pulse.length_epochs} epochs with laxity {m} from epoch {t} "
            f"runs past the price horizon ({pi.size} epochs)"
        )
    base = shifted_cost(pulse, t, pi)
    best_alpha, best = t, base
    for alpha in range(t + 1, t + m + 1):
        cost = shifted_cost(pulse, alpha, pi)
        if cost < best:
            best_alpha, best = alpha, cost
    return DeferrableUtility(base - best, best_alpha, base, best)


def hourly_load_trace(pulse: DeferrablePulse, alpha: int, epochs_per_hour: int, hours: int) -> np.ndarray:
    """Energy (kWh) drawn in each market hour by the pulse activated at ``alpha``."""
    power = np.zeros(hours * epochs_per_hour)
    g = pulse.as_array()
    if alpha + g.size > power.size:
        raise InputError("pulse runs past the hourly horizon")
    power[alpha:alpha + g.size] = g
    return power.reshape(hours, epochs_per_hour).sum(axis=1) / epochs_per_hour


# -- thermostatically controlled loads ---------------------------------------


@dataclass(frozen=True)
class TCLTrace:
    """Expected temperatures ``x(start .. start + n)`` under an on-schedule ``b(start .. start + n - 1)``.

    ``b(j)`` is the duty applied during epoch ``j``; it moves ``x(j)`` to ``x(j + 1)``.
    """

    temperatures: np.ndarray
    on_schedule: np.ndarray
    start: int = 0


def ambient_series(ambient, length: int) -> np.ndarray:
    """Ambient temperature per absolute epoch, broadcasting a scalar."""
    arr = np.asarray(ambient, dtype=float)
    if arr.ndim == 0:
        return np.full(length, float(arr))
    if arr.size < length:
        raise InputError(f"ambient series covers {arr.size} epochs, need {length}")
    return arr


def tcl_trace(params: TCLParams, start: int, ambient, schedule, initial: Optional[float] = None,
              rng: Optional[np.random.Generator] = None) -> TCLTrace:
    """Iterate ``x(j+1) = x(j) - k (x(j) - x_a(j)) + W b(j)``.

    Starts from the ambient temperature unless ``initial`` is given. With an
    ``rng`` and a positive ``noise_std`` a Gaussian disturbance is added each
    step; otherwise the expected trajectory is returned.
    """
    b = np.asarray(schedule, dtype=float)
    if np.any(b < 0) or np.any(b > 1):
        raise InputError("schedule values must lie in [0, 1]")
    xa = ambient_series(ambient, start + b.size + 1)
    k, w = params.loss_rate, params.heat_gain
    x = np.empty(b.size + 1)
    x[0] = xa[start] if initial is None else initial
    for i in range(b.size):
        j = start + i
        x[i + 1] = x[i] - k * (x[i] - xa[j]) + w * b[i]
        if rng is not None and params.noise_std > 0:
            x[i + 1] += rng.normal(0.0, params.noise_std)
    return TCLTrace(x, b, start)


def tcl_closed_form(params: TCLParams, start: int, ambient, schedule, initial: Optional[float] = None) -> np.ndarray:
    """Closed-form expected temperatures, term by term.

    ``x(j) = (1-k)^(j-t) x(t) + sum_{w=t}^{j-1} (1-k)^(j-w-1) (k x_a(w) + W b(w))``.
    """
    b = np.asarray(schedule, dtype=float)
    xa = ambient_series(ambient, start + b.size + 1)
    k, w = params.loss_rate, params.heat_gain
    x0 = xa[start] if initial is None else initial
    out = np.empty(b.size + 1)
    for n in range(b.size + 1):
        acc = (1 - k) ** n * x0
        for i in range(n):
            acc += (1 - k) ** (n - i - 1) * (k * xa[start + i] + w * b[i])
        out[n] = acc
    return out


class TauUp(NamedTuple):
    epochs: int
    continuous: float


def tcl_tau_up(params: TCLParams, ambient_at_arrival: float) -> TauUp:
    """Epochs of continuous heating needed to lift the ambient temperature to ``comfort_high``.

    Found by iterating the discrete dynamics. ``continuous`` is the log-formula
    approximation ``(1/k) ln((W/k) / (x_a + W/k - x_max))`` for reference.
    """
    k, w, target = params.loss_rate, params.heat_gain, params.comfort_high
    xa = float(ambient_at_arrival)
    steady = xa + w / k
    if target <= xa + REACH_TOL:
        return TauUp(0, 0.0)
    if steady <= target + REACH_TOL:
        raise InfeasibleError(
            f"heating saturates at {steady!r}, never reaching {target!r}",
            interval=(xa, steady),
        )
    continuous = math.log((w / k) / (steady - target)) / k
    x, n = xa, 0
    while x < target - REACH_TOL:
        x = x - k * (x - xa) + w
        n += 1
    return TauUp(n, continuous)


@dataclass(frozen=True)
class PreheatResult:
    cost: float
    schedule: np.ndarray
    terminal: float
    band: tuple
    tolerance: float
    reachable: tuple


def _preheat_weights(params: TCLParams, t: int, m: int, ambient):
    """Terminal temperature with the unit off, and each epoch's marginal effect on it."""
    xa = ambient_series(ambient, t + m + 1)
    base = tcl_closed_form(params, t, xa, np.zeros(m))[-1]
    k = params.loss_rate
    weights = params.heat_gain * (1 - k) ** np.arange(m - 1, -1, -1, dtype=float)
    return base, weights


def _greedy_lp(costs: np.ndarray, weights: np.ndarray, need_lo: float, need_hi: float) -> np.ndarray:
    """Exact solution of ``min c.b  s.t.  need_lo <= a.b <= need_hi, 0 <= b <= 1`` for ``a > 0``."""
    b = (costs < 0).astype(float)
    total = float(weights @ b)
    if total < need_lo:
        idle = np.nonzero(b == 0)[0]
        order = idle[np.lexsort((idle, costs[idle] / weights[idle]))]
        for i in order:
            gap = need_lo - total
            if gap <= 0:
                break
            b[i] = min(1.0, gap / weights[i])
            total += b[i] * weights[i]
    elif total > need_hi:
        running = np.nonzero(b == 1)[0]
        order = running[np.lexsort((running, -costs[running] / weights[running]))]
        for i in order:
            excess = total - need_hi
            if excess <= 0:
                break
            cut = min(1.0, excess / weights[i])
            b[i] -= cut
            total -= cut * weights[i]
    return b


def tcl_preheat_cost(params: TCLParams, t: int, m: int, prices, ambient, binary: bool = False) -> PreheatResult:
    """Cheapest preheating over epochs ``t .. t+m-1`` landing in the terminal band.

    The band is ``[x_max - delta, x_max + delta]`` on ``x(t + m)``. Duties are
    fractional in [0, 1]; ``binary=True`` restricts them to on/off by
    enumeration (at most ``BINARY_MAX_EPOCHS`` epochs). The duty at ``t + m``
    cannot move ``x(t + m)`` and is left off.
    """
    if m < 0 or t < 0:
        raise InputError("epoch and mode must be >= 0")
    pi = _price_values(prices)
    if t + m > pi.size:
        raise InputError(f"prices cover {pi.size} epochs, preheating needs {t + m}")
    base, weights = _preheat_weights(params, t, m, ambient)
    costs = pi[t:t + m] * params.power
    reach = (base, base + float(weights.sum()))
    target = params.comfort_high

    if binary:
        if m > BINARY_MAX_EPOCHS:
            raise InputError(f"binary preheating enumerates at most {BINARY_MAX_EPOCHS} epochs")
        points = np.array(list(itertools.product((0.0, 1.0), repeat=m))).reshape(-1, m)
        terminals = base + points @ weights
        delta = params.tolerance
        if delta is None:
            delta = float(np.min(np.abs(terminals - target)))
        ok = np.abs(terminals - target) <= delta + REACH_TOL
        if not ok.any():
            raise InfeasibleError(
                f"no on/off schedule lands within {delta!r} of {target!r}", interval=reach
            )
        point_costs = np.where(ok, points @ costs, np.inf)
        best = int(np.argmin(point_costs))
        b = points[best]
        return PreheatResult(float(point_costs[best]), b, float(terminals[best]),
                             (target - delta, target + delta), float(delta), reach)

    delta = params.tolerance
    if delta is None:
        delta = max(0.0, reach[0] - target, target - reach[1])
    lo, hi = target - delta, target + delta
    if hi < reach[0] - REACH_TOL or lo > reach[1] + REACH_TOL:
        raise InfeasibleError(
            f"terminal band [{lo!r}, {hi!r}] misses the reachable interval [{reach[0]!r}, {reach[1]!r}]",
            interval=reach,
        )
    b = _greedy_lp(costs, weights, lo - base, hi - base) if m else np.zeros(0)
    terminal = base + float(weights @ b)
    return PreheatResult(float(costs @ b), b, terminal, (lo, hi), float(delta), reach)


class TCLUtility(NamedTuple):
    utility: float
    c_normal: float
    c_preheat: float
    tau_up: int
    reached: bool


def tcl_utility(params: TCLParams, t: int, m: int, prices, ambient, binary: bool = False) -> TCLUtility:
    """Saving from preheating during the laxity window versus heating on arrival.

    The normal first cycle runs flat out from ``t + m`` for ``tau_up`` epochs.
    When no band half-width is configured and ``comfort_high`` cannot be
    reached by ``t + m``, the preheat does not replace that cycle and the
    utility is 0 (``reached=False``).
    """
    pi = _price_values(prices)
    xa = ambient_series(ambient, t + m + 1)
    tau = tcl_tau_up(params, xa[t + m])
    if t + m + tau.epochs > pi.size:
        raise InputError(f"prices cover {pi.size} epochs, normal cycle needs {t + m + tau.epochs}")
    c_normal = math.fsum(pi[t + m:t + m + tau.epochs]) * params.power
    pre = tcl_preheat_cost(params, t, m, pi, xa, binary=binary)
    reached = params.tolerance is not None or pre.terminal >= params.comfort_high - 1e-6
    if not reached:
        return TCLUtility(0.0, c_normal, pre.cost, tau.epochs, False)
    return TCLUtility(max(c_normal - pre.cost, 0.0), c_normal, pre.cost, tau.epochs, True)


def utility_table(cluster: Cluster, grid: TimeGrid, prices, ambient=None, binary: bool = False) -> UtilityTable:
    """Evaluate U^t(m) for every epoch of the grid and every mode of the cluster.

    Deferrable cells whose laxity window overruns the price horizon use the
    largest laxity that fits (keeping rows non-decreasing in ``m``); cells
    where even the uncontrolled pulse overruns are 0. TCL cells that cannot be
    evaluated are 0. Both cases are flagged.
    """
    pi = _price_values(prices)
    horizon, modes = grid.horizon_epochs, cluster.mode_count
    values = np.zeros((horizon, modes + 1))
    flags = np.zeros((horizon, modes + 1), dtype=bool)
    spec = cluster.spec
    if isinstance(spec, DeferrablePulse):
        for t in range(horizon):
            room = pi.size - spec.length_epochs - t
            if room < 0:
                flags[t, 1:] = True
                continue
            for m in range(1, modes + 1):
                m_eff = min(m, room)
                flags[t, m] = m_eff < m
                values[t, m] = deferrable_utility(spec, t, m_eff, pi).utility
    elif isinstance(spec, TCLParams):
        if ambient is None:
            raise InputError("TCL clusters need an ambient temperature series")
        for t in range(horizon):
            for m in range(1, modes + 1):
                try:
                    res = tcl_utility(spec, t, m, pi, ambient, binary=binary)
                except (InputError, InfeasibleError):
                    flags[t, m] = True
                    continue
                values[t, m] = res.utility
                flags[t, m] = not res.reached
    else:
        raise InputError(f"unknown consumption spec {type(spec).__name__}")
    return UtilityTable(values, flags)
