"""Shared domain types and menu-validity predicates.

Conventions used throughout the package:

* Epochs are 0-based row indices ``t = 0 .. T-1`` into the horizon.
* Modes are 1-based: column ``j`` of a menu or risk table holds mode ``j + 1``;
  mode 0 (non-participation) is implicit with zero incentive, zero risk and
  zero utility.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from .exceptions import InputError

TOL = 1e-12


def _frozen_array(values, ndim=None, name="array") -> np.ndarray:
    arr = np.array(values, dtype=float)
    if ndim is not None and arr.ndim not in (ndim if isinstance(ndim, tuple) else (ndim,)):
        raise InputError(f"{name} must have ndim {ndim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Sub-hourly epoch grid with ``epochs_per_hour`` epochs per market hour."""

    epochs_per_hour: int = 2
    horizon_epochs: int = 48

    def __post_init__(self):
        if int(self.epochs_per_hour) != self.epochs_per_hour or self.epochs_per_hour < 1:
            raise InputError("epochs_per_hour must be a positive integer")
        if int(self.horizon_epochs) != self.horizon_epochs or self.horizon_epochs < 1:
            raise InputError("horizon_epochs must be a positive integer")

    @property
    def epoch_duration_hours(self) -> float:
        return 1.0 / self.epochs_per_hour

    def hour_of(self, epoch: int) -> int:
        return epoch // self.epochs_per_hour

    def contains(self, epoch: int) -> bool:
        return 0 <= epoch < self.horizon_epochs


@dataclass(frozen=True)
class DeferrablePulse:
    """Non-interruptible load: ``pulse[k]`` is the power (kW) drawn k epochs after activation."""

    pulse: tuple

    def __post_init__(self):
        pulse = tuple(float(v) for v in self.pulse)
        if len(pulse) < 1:
            raise InputError("pulse must have at least one epoch")
        if any(v < 0 or not np.isfinite(v) for v in pulse):
            raise InputError("pulse values must be finite and >= 0")
        object.__setattr__(self, "pulse", pulse)

    @property
    def length_epochs(self) -> int:
        return len(self.pulse)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.pulse, dtype=float)


@dataclass(frozen=True)
class TCLParams:
    """First-order heating model parameters for one TCL cluster.

    ``tolerance`` is the terminal band half-width; ``None`` picks the smallest
    width that makes the band reachable.
    """

    loss_rate: float
    heat_gain: float
    power: float
    comfort_low: float
    comfort_high: float
    tolerance: Optional[float] = None
    noise_std: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.loss_rate < 1.0:
            raise InputError("loss_rate must lie in (0, 1)")
        if self.heat_gain <= 0:
            raise InputError("heat_gain must be positive")
        if self.power < 0:
            raise InputError("power must be >= 0")
        if not self.comfort_low < self.comfort_high:
            raise InputError("comfort_low must be below comfort_high")
        if self.tolerance is not None and self.tolerance < 0:
            raise InputError("tolerance must be >= 0")
        if self.noise_std < 0:
            raise InputError("noise_std must be >= 0")


ConsumptionSpec = Union[DeferrablePulse, TCLParams]


@dataclass(frozen=True)
class Cluster:
    """An appliance class with modes ``1..mode_count`` and a risk shape.

    ``risk_shape`` is either a length-M vector (time invariant) or a (T, M)
    table giving ``r(t, m)`` for modes ``m >= 1``; the default is ``r(m) = m``.
    """

    id: int
    mode_count: int
    spec: ConsumptionSpec
    risk_shape: Optional[np.ndarray] = None

    def __post_init__(self):
        if int(self.mode_count) != self.mode_count or self.mode_count < 1:
            raise InputError("mode_count must be a positive integer")
        if self.risk_shape is None:
            risk = np.arange(1, self.mode_count + 1, dtype=float)
        else:
            risk = np.array(self.risk_shape, dtype=float)
        risk = _frozen_array(risk, ndim=(1, 2), name="risk_shape")
        if risk.shape[-1] != self.mode_count:
            raise InputError(
                f"risk_shape has {risk.shape[-1]} modes, cluster declares {self.mode_count}"
            )
        check_risk_shape(risk)
        object.__setattr__(self, "risk_shape", risk)

    @property
    def kind(self) -> str:
        return "tcl" if isinstance(self.spec, TCLParams) else "deferrable"

    def risk(self, t: int = 0) -> np.ndarray:
        """Risk shape ``r(t, 1..M)`` at epoch ``t``."""
        if self.risk_shape.ndim == 1:
            return self.risk_shape
        return self.risk_shape[t]


def check_risk_shape(risk) -> None:
    """Raise unless every row is positive and strictly increasing in mode."""
    risk = np.atleast_2d(np.asarray(risk, dtype=float))
    padded = np.concatenate([np.zeros((risk.shape[0], 1)), risk], axis=1)
    if np.any(np.diff(padded, axis=1) <= 0):
        raise InputError("risk shape must satisfy 0 = r(0) < r(1) < ... < r(M)")


@dataclass(frozen=True)
class IncentiveMenu:
    """Incentive table ``values[t, m-1] = I^t(m)`` for modes ``m = 1..M``."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, ndim=2, name="menu")
        if np.any(arr < 0):
            raise InputError("menu entries must be >= 0")
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, horizon: int, modes: int) -> "IncentiveMenu":
        return cls(np.zeros((horizon, modes)))

    @property
    def horizon(self) -> int:
        return self.values.shape[0]

    @property
    def mode_count(self) -> int:
        return self.values.shape[1]

    def column(self, t: int) -> np.ndarray:
        """Incentives offered at epoch ``t`` for modes ``1..M``."""
        return self.values[t]


class UniformPrior:
    """Uniform type prior on ``[0, gamma_max]``."""

    def __init__(self, gamma_max: float):
        if not gamma_max > 0:
            raise InputError("gamma_max must be positive")
        self.gamma_max = float(gamma_max)

    @property
    def upper(self) -> float:
        return self.gamma_max

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float) / self.gamma_max, 0.0, 1.0)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.uniform(0.0, self.gamma_max, size=size)

    def __repr__(self):
        return f"UniformPrior(gamma_max={self.gamma_max!r})"

    def __eq__(self, other):
        return isinstance(other, UniformPrior) and other.gamma_max == self.gamma_max

    def __hash__(self):
        return hash(("uniform", self.gamma_max))


class DistributionPrior:
    """Adapter for any frozen ``scipy.stats`` distribution supported on ``[0, inf)``."""

    def __init__(self, dist):
        self.dist = dist
        lo, hi = dist.support()
        if lo < 0:
            raise InputError("type prior support must lie in [0, inf)")
        self.upper = float(hi)

    def cdf(self, x):
        return np.clip(self.dist.cdf(np.maximum(np.asarray(x, dtype=float), 0.0)), 0.0, 1.0)

    def sample(self, rng: np.random.Generator, size=None):
        return self.dist.rvs(size=size, random_state=rng)


@dataclass(frozen=True)
class RiskModel:
    """Type prior together with the cluster's risk shape; risk is ``gamma * r(t, m)``."""

    prior: object
    risk_shape: np.ndarray

    def __post_init__(self):
        risk = _frozen_array(self.risk_shape, ndim=(1, 2), name="risk_shape")
        check_risk_shape(risk)
        object.__setattr__(self, "risk_shape", risk)

    @classmethod
    def for_cluster(cls, cluster: Cluster, prior) -> "RiskModel":
        return cls(prior, cluster.risk_shape)

    @property
    def mode_count(self) -> int:
        return self.risk_shape.shape[-1]

    def risk(self, t: int = 0) -> np.ndarray:
        if self.risk_shape.ndim == 1:
            return self.risk_shape
        return self.risk_shape[t]


@dataclass(frozen=True)
class Task:
    """One appliance-use event offered the menu at ``arrival_epoch``."""

    id: int
    cluster: int
    arrival_epoch: int
    true_type: float
    max_feasible_mode: int

    def __post_init__(self):
        if self.arrival_epoch < 0:
            raise InputError("arrival_epoch must be >= 0")
        if self.true_type < 0:
            raise InputError("task type must be >= 0")
        if self.max_feasible_mode < 0:
            raise InputError("max_feasible_mode must be >= 0")


@dataclass(frozen=True)
class ChoiceDistribution:
    """Probability of each mode ``0..M``."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = _frozen_array(self.probabilities, ndim=1, name="probabilities")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise InputError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > 1e-9:
            raise InputError(f"probabilities sum to {p.sum()!r}, expected 1")
        object.__setattr__(self, "probabilities", p)

    def __getitem__(self, mode):
        return self.probabilities[mode]

    def __len__(self):
        return len(self.probabilities)


class Violation(NamedTuple):
    t: int
    m: int


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def validate_diminishing(menu: IncentiveMenu, grid: Optional[TimeGrid] = None, tol: float = TOL) -> CheckResult:
    """Check ``I^t(m) <= I^{t-1}(m+1)`` for ``1 <= m <= M-1`` and ``t >= 1``.

    Joining later with the same deadline must never pay more. Violations are
    reported as ``(t, m)`` with 0-based epoch and 1-based mode.
    """
    values = menu.values
    if grid is not None and grid.horizon_epochs != menu.horizon:
        raise InputError("menu horizon does not match the time grid")
    bad = values[1:, :-1] > values[:-1, 1:] + tol
    violations = [Violation(int(t) + 1, int(j) + 1) for t, j in zip(*np.nonzero(bad))]
    return CheckResult(not violations, violations)


def adjacent_ratios(incentives, risk) -> np.ndarray:
    """Per-unit-risk increments ``(I(m) - I(m-1)) / (r(m) - r(m-1))`` for ``m = 1..M+1``.

    The last entry is the dummy mode ``M+1`` with ``I(M+1) = I(M)`` and
    ``r(M+1) = r(M) + 1``, so it is always 0. Works on batches along the last
    axis.
    """
    incentives = np.asarray(incentives, dtype=float)
    risk = np.asarray(risk, dtype=float)
    lead = incentives.shape[:-1]
    zero = np.zeros(lead + (1,))
    inc = np.concatenate([zero, incentives, incentives[..., -1:]], axis=-1)
    r = np.concatenate([np.zeros(risk.shape[:-1] + (1,)), risk, risk[..., -1:] + 1.0], axis=-1)
    return np.diff(inc, axis=-1) / np.diff(r, axis=-1)


def validate_single_crossing(menu: IncentiveMenu, cluster: Cluster, t: Optional[int] = None,
                             tol: float = TOL) -> CheckResult:
    """Check that incentive growth per unit risk is non-increasing in mode.

    With ``t=None`` every epoch of the menu is checked. Violations are
    ``(t, m)`` where the ratio entering mode ``m+1`` exceeds the one entering
    mode ``m``.
    """
    epochs = range(menu.horizon) if t is None else [t]
    violations = []
    for s in epochs:
        ratios = adjacent_ratios(menu.column(s), cluster.risk(s))
        for j in np.nonzero(ratios[1:] > ratios[:-1] + tol)[0]:
            violations.append(Violation(s, int(j) + 1))
    return CheckResult(not violations, violations)
