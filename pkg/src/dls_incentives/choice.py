"""Rational customer choice: decision rule, analytic probabilities, Monte Carlo check, calibration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .exceptions import InputError
from .model import TOL, ChoiceDistribution, IncentiveMenu, RiskModel, adjacent_ratios

MC_CHUNK = 200_000


class ChoiceBounds(NamedTuple):
    """Type interval ``[lower, upper]`` in which a mode is chosen; empty when lower > upper."""

    lower: float
    upper: float

    @property
    def empty(self) -> bool:
        return self.lower > self.upper


def _truncate(incentives, risk, cap):
    incentives = np.asarray(incentives, dtype=float)
    risk = np.asarray(risk, dtype=float)
    if cap is None:
        return incentives, risk
    if cap < 0:
        raise InputError("mode cap must be >= 0")
    return incentives[..., :cap], risk[..., :cap]


def _pairwise_ratios(incentives, risk):
    """Ratios ``(I(a) - I(b)) / (r(a) - r(b))`` over modes ``0..M+1`` (dummy last)."""
    lead = incentives.shape[:-1]
    inc = np.concatenate([np.zeros(lead + (1,)), incentives, incentives[..., -1:]], axis=-1)
    r = np.concatenate([np.zeros(risk.shape[:-1] + (1,)), risk, risk[..., -1:] + 1.0], axis=-1)
    d_inc = inc[..., :, None] - inc[..., None, :]
    d_r = r[..., :, None] - r[..., None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        return d_inc / d_r


def all_bounds(incentives, risk) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper type thresholds for modes ``1..M``, batched over leading axes.

    ``upper[m] = min_{m' < m} ratio(m, m')`` (participation and the cheaper
    modes), ``lower[m] = max_{m' > m} ratio(m', m)`` including the dummy mode.
    """
    incentives = np.asarray(incentives, dtype=float)
    risk = np.broadcast_to(np.asarray(risk, dtype=float), incentives.shape)
    modes = incentives.shape[-1]
    if modes == 0:
        empty = np.zeros(incentives.shape[:-1] + (0,))
        return empty, empty
    ratios = _pairwise_ratios(incentives, risk)
    idx = np.arange(modes + 2)
    below = idx[None, :] < idx[:, None]
    upper = np.where(below, ratios, np.inf).min(axis=-1)[..., 1:modes + 1]
    lower = np.where(~below & (idx[None, :] != idx[:, None]), ratios, -np.inf).max(axis=-1)[..., 1:modes + 1]
    return lower, upper


def choice_bounds(incentives, risk, m: int) -> ChoiceBounds:
    """Exact type interval for choosing mode ``m >= 1``."""
    incentives = np.asarray(incentives, dtype=float)
    if not 1 <= m <= incentives.shape[-1]:
        raise InputError(f"mode {m} outside 1..{incentives.shape[-1]}")
    lower, upper = all_bounds(incentives, risk)
    return ChoiceBounds(float(lower[m - 1]), float(upper[m - 1]))


def adjacent_bounds(incentives, risk, m: int) -> ChoiceBounds:
    """Interval from neighbouring modes only; exact for single-crossing menus."""
    ratios = adjacent_ratios(incentives, risk)
    return ChoiceBounds(float(ratios[m]), float(ratios[m - 1]))


def mode_probabilities(incentives, risk, cdf, cap: Optional[int] = None) -> np.ndarray:
    """Probabilities of modes ``0..M`` for one menu column or a batch of them."""
    incentives = np.asarray(incentives, dtype=float)
    modes = incentives.shape[-1]
    inc, r = _truncate(incentives, risk, cap)
    out = np.zeros(incentives.shape[:-1] + (modes + 1,))
    if inc.shape[-1]:
        lower, upper = all_bounds(inc, r)
        p = np.maximum(cdf(upper) - cdf(np.maximum(lower, 0.0)), 0.0)
        out[..., 1:inc.shape[-1] + 1] = p
        # Nobody participates above the best incentive-to-risk ratio.
        with np.errstate(divide="ignore", invalid="ignore"):
            ceiling = np.max(inc / np.broadcast_to(r, inc.shape), axis=-1)
        out[..., 0] = 1.0 - cdf(np.maximum(ceiling, 0.0))
    else:
        out[..., 0] = 1.0
    return out


def choice_probabilities(incentives, risk, cap: Optional[int] = None, t: int = 0) -> ChoiceDistribution:
    """Analytic distribution of the chosen mode for a random customer.

    ``risk`` is a :class:`RiskModel`. With ``cap``, modes above it are not
    offered and their probability is 0.
    """
    p = mode_probabilities(incentives, risk.risk(t), risk.prior.cdf, cap)
    return ChoiceDistribution(p / p.sum())


def decide_modes(gammas, incentives, risk, caps=None, rng: Optional[np.random.Generator] = None,
                 tol: float = TOL) -> np.ndarray:
    """Vectorised utility-maximising mode for each customer.

    ``incentives`` and ``risk`` are (N, M) or a single (M,) row shared by all.
    Modes above each customer's cap are unavailable. Ties within ``tol`` are
    broken uniformly at random using ``rng``; one uniform draw is consumed per
    (customer, mode) cell whether or not a tie occurs.
    """
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    n = gammas.size
    incentives = np.broadcast_to(np.asarray(incentives, dtype=float), (n, np.shape(incentives)[-1]))
    risk = np.broadcast_to(np.asarray(risk, dtype=float), incentives.shape)
    modes = incentives.shape[1]
    value = np.zeros((n, modes + 1))
    value[:, 1:] = incentives - gammas[:, None] * risk
    if caps is not None:
        caps = np.broadcast_to(np.asarray(caps, dtype=int), (n,))
        value[np.arange(modes + 1)[None, :] > caps[:, None]] = -np.inf
    best = value.max(axis=1, keepdims=True)
    tied = value >= best - tol
    if rng is None:
        rng = np.random.default_rng(0)
    keys = rng.random((n, modes + 1))
    keys[~tied] = -1.0
    return keys.argmax(axis=1)


def decide_mode(gamma: float, incentives, risk, rng: Optional[np.random.Generator] = None,
                cap: Optional[int] = None) -> int:
    """Mode maximising ``I(m) - gamma * r(m)`` with ``V(0) = 0``."""
    caps = None if cap is None else [cap]
    return int(decide_modes([gamma], incentives, risk, caps, rng)[0])


def monte_carlo_choice(incentives, risk: RiskModel, draws: int, rng: np.random.Generator,
                       cap: Optional[int] = None, t: int = 0) -> ChoiceDistribution:
    """Empirical mode frequencies over ``draws`` simulated customers."""
    if draws < 1:
        raise InputError("draws must be >= 1")
    incentives = np.asarray(incentives, dtype=float)
    counts = np.zeros(incentives.shape[-1] + 1)
    r = risk.risk(t)
    done = 0
    while done < draws:
        n = min(MC_CHUNK, draws - done)
        gammas = risk.prior.sample(rng, n)
        modes = decide_modes(gammas, incentives, r, None if cap is None else np.full(n, cap), rng)
        counts += np.bincount(modes, minlength=counts.size)
        done += n
    return ChoiceDistribution(counts / draws)


@dataclass(frozen=True)
class Calibration:
    gammas: np.ndarray
    gamma_max: float


def calibrate_types(events: Iterable, sample_menu: IncentiveMenu, risk_shape) -> Calibration:
    """Tightest type consistent with each event's observed maximum laxity.

    A customer who could offer at most mode ``m_d`` must find mode ``m_d + 1``
    not worth it: ``gamma * r(m_d + 1) >= I(m_d + 1)``. We take equality, and
    fit the uniform prior's upper end as the largest such type. Events at the
    top mode use the dummy mode ``I(M+1) = I(M)``, ``r(M+1) = r(M) + 1``.
    """
    risk = np.asarray(risk_shape, dtype=float)
    modes = sample_menu.mode_count
    gammas = []
    for ev in events:
        t = int(ev.arrival_epoch)
        if not 0 <= t < sample_menu.horizon:
            raise InputError(f"event arrival {t} outside the sample menu horizon")
        m_d = min(int(ev.max_feasible_mode), modes)
        row = sample_menu.column(t)
        r = risk if risk.ndim == 1 else risk[t]
        if m_d < modes:
            gammas.append(row[m_d] / r[m_d])
        else:
            gammas.append(row[modes - 1] / (r[modes - 1] + 1.0))
    gammas = np.asarray(gammas, dtype=float)
    return Calibration(gammas, float(gammas.max()) if gammas.size else 0.0)
