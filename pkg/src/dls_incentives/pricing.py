"""Hourly wholesale prices and their sub-hourly expansion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import InputError
from .model import TimeGrid


@dataclass(frozen=True)
class PriceSeries:
    """Expected hourly wholesale prices ($/kWh) and optional base load (kWh).

    The base load is carried for reporting only; the aggregator is a price
    taker, so it never enters the utility computations.
    """

    hourly: np.ndarray
    base_load: Optional[np.ndarray] = None

    def __post_init__(self):
        hourly = np.array(self.hourly, dtype=float)
        if hourly.ndim != 1 or hourly.size < 1:
            raise InputError("price series must be a non-empty vector")
        if not np.all(np.isfinite(hourly)):
            raise InputError("prices must be finite")
        hourly.setflags(write=False)
        object.__setattr__(self, "hourly", hourly)
        if self.base_load is not None:
            load = np.array(self.base_load, dtype=float)
            if load.shape != hourly.shape:
                raise InputError("base_load must match the price series length")
            load.setflags(write=False)
            object.__setattr__(self, "base_load", load)

    @property
    def hours(self) -> int:
        return self.hourly.size


@dataclass(frozen=True)
class SubHourlyPrices:
    """Per-epoch virtual prices; ``values[j] * power_kW`` is the cost of epoch ``j``."""

    values: np.ndarray
    epochs_per_hour: int = 1

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def __getitem__(self, item):
        return self.values[item]


def expand_prices(series: PriceSeries, grid: TimeGrid) -> SubHourlyPrices:
    """Spread each hourly price evenly over the hour's epochs.

    ``pi_p[j] = pi_e[j // S] / S`` so that summing the epochs of an hour
    recovers the hourly price.
    """
    hourly = np.asarray(series.hourly, dtype=float)
    if hourly.size == 0:
        raise InputError("cannot expand an empty price series")
    s = grid.epochs_per_hour
    return SubHourlyPrices(np.repeat(hourly / s, s), s)


@dataclass(frozen=True)
class PriceShape:
    """Parameters of the synthetic diurnal two-level profile.

    Hours whose hour-of-day lies in ``[peak_hour - peak_width/2, peak_hour + peak_width/2)``
    get ``peak_level``; all others ``offpeak_level``. Each value is then
    scaled by ``1 + noise * u`` with ``u ~ U[-1, 1]``.
    """

    peak_hour: int = 18
    peak_level: float = 0.05
    offpeak_level: float = 0.025
    hours: int = 36
    peak_width: int = 6
    noise: float = 0.1


def synth_prices(shape: PriceShape, seed=None) -> PriceSeries:
    """Deterministic synthetic price series for a given seed."""
    if shape.hours < 1:
        raise InputError("hours must be >= 1")
    if not shape.peak_level >= shape.offpeak_level >= 0:
        raise InputError("need peak_level >= offpeak_level >= 0")
    if not 0 <= shape.noise < 1:
        raise InputError("noise must lie in [0, 1)")
    hour_of_day = np.arange(shape.hours) % 24
    offset = (hour_of_day - shape.peak_hour + shape.peak_width / 2.0) % 24
    base = np.where(offset < shape.peak_width, shape.peak_level, shape.offpeak_level)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=shape.hours)
    return PriceSeries(base * (1.0 + shape.noise * u))


def hourly_cost(series: PriceSeries, hourly_load) -> float:
    """Cost of an hourly energy trace (kWh per hour) at the expected prices."""
    load = np.asarray(hourly_load, dtype=float)
    return float(np.dot(series.hourly[: load.size], load))
