"""Profit-maximising single-crossing incentive menus.

Under a uniform type prior on ``[0, gamma_max]`` and a single-crossing menu,
a customer picks mode ``m`` exactly when their type lies between the adjacent
ratios ``rho(m+1) <= gamma <= rho(m)``, so the expected net revenue per
arrival at epoch ``t`` is

    N_t = (1 / gamma_max) * sum_m (U_t(m) - I_t(m)) * (rho_t(m) - rho_t(m+1))

which is a concave quadratic in the incentives. The constraints (diminishing
payoffs across epochs, single crossing, monotone incentives, participation
cap) are affine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .choice import mode_probabilities
from .exceptions import InputError, SizeError, UnsupportedPriorError
from .model import IncentiveMenu, RiskModel, UniformPrior
from .qp import solve_qp
from .utility import UtilityTable

FEAS_TOL = 1e-8


class ConstraintLabel(NamedTuple):
    kind: str  # "monotone" | "single_crossing" | "cap" | "diminishing"
    t: int
    m: int


@dataclass(frozen=True)
class QPInstance:
    """``max 0.5 x'Hx + c'x  s.t.  G x <= h`` with ``x[t * M + m - 1] = I^t(m)``."""

    horizon: int
    modes: int
    hessian: np.ndarray
    linear: np.ndarray
    G: np.ndarray
    h: np.ndarray
    labels: list
    gamma_max: float
    risk_steps: np.ndarray  # (T, M) increments r(t, m) - r(t, m-1)

    def index(self, t: int, m: int) -> int:
        return t * self.modes + (m - 1)

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(0.5 * x @ self.hessian @ x + self.linear @ x)

    def menu(self, x) -> IncentiveMenu:
        x = np.asarray(x, dtype=float).reshape(self.horizon, self.modes)
        return IncentiveMenu(np.where(x < 0, 0.0, x))

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(np.max(self.G @ x - self.h, initial=0.0))


@dataclass(frozen=True)
class MenuSolution:
    menu: IncentiveMenu
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool = True
    max_violation: float = 0.0
    details: dict = field(default_factory=dict)


class ProfitBreakdown(NamedTuple):
    per_epoch: np.ndarray
    total: float


def _uniform_gamma_max(risk: RiskModel) -> float:
    if not isinstance(risk.prior, UniformPrior):
        raise UnsupportedPriorError(
            f"closed-form menu optimisation needs a uniform type prior, got {risk.prior!r}; "
            "use expected_profit with the learning baseline instead"
        )
    return risk.prior.gamma_max


def _revenue_block(risk_row: np.ndarray) -> np.ndarray:
    """Matrix mapping incentives to ``rho(m) - rho(m+1)`` (dummy ``rho(M+1) = 0``)."""
    modes = risk_row.size
    dr = np.diff(np.concatenate([[0.0], risk_row]))
    rho = np.zeros((modes + 1, modes))
    for m in range(modes):
        rho[m, m] = 1.0 / dr[m]
        if m:
            rho[m, m - 1] = -1.0 / dr[m]
    return rho[:-1] - rho[1:]


def assemble_qp(utilities: UtilityTable, risk: RiskModel) -> QPInstance:
    """Build the concave QP for the whole utility horizon."""
    gamma_max = _uniform_gamma_max(risk)
    horizon, modes = utilities.horizon, utilities.mode_count
    if risk.mode_count != modes:
        raise InputError(f"risk shape has {risk.mode_count} modes, utilities have {modes}")
    n = horizon * modes
    hessian = np.zeros((n, n))
    linear = np.zeros(n)
    rows, rhs, labels = [], [], []
    steps = np.zeros((horizon, modes))

    def add(coeffs: dict, bound: float, label: ConstraintLabel):
        row = np.zeros(n)
        for idx, val in coeffs.items():
            row[idx] += val
        rows.append(row)
        rhs.append(bound)
        labels.append(label)

    for t in range(horizon):
        r = np.asarray(risk.risk(t), dtype=float)
        dr = np.diff(np.concatenate([[0.0], r]))
        steps[t] = dr
        block = _revenue_block(r)
        sl = slice(t * modes, (t + 1) * modes)
        hessian[sl, sl] = -(block + block.T) / gamma_max
        linear[sl] = block.T @ utilities.values[t, 1:] / gamma_max
        base = t * modes
        for m in range(1, modes + 1):
            coeffs = {base + m - 1: -1.0}
            if m > 1:
                coeffs[base + m - 2] = 1.0
            add(coeffs, 0.0, ConstraintLabel("monotone", t, m))
        # At m = M the crossing condition against the dummy mode is the
        # monotone row above, so only m < M is added.
        for m in range(1, modes):
            coeffs = {base + m: 1.0 / dr[m], base + m - 1: -1.0 / dr[m] - 1.0 / dr[m - 1]}
            if m > 1:
                coeffs[base + m - 2] = 1.0 / dr[m - 1]
            add(coeffs, 0.0, ConstraintLabel("single_crossing", t, m))
        add({base: 1.0 / r[0]}, gamma_max, ConstraintLabel("cap", t, 1))
        if t >= 1:
            for m in range(1, modes):
                add({base + m - 1: 1.0, base - modes + m: -1.0}, 0.0, ConstraintLabel("diminishing", t, m))

    G = np.array(rows) if rows else np.zeros((0, n))
    return QPInstance(horizon, modes, hessian, linear, G, np.array(rhs), labels, gamma_max, steps)


def interior_start(qp: QPInstance) -> np.ndarray:
    """A strictly feasible menu when one is easy to build, else the all-zero menu.

    Starting inside the polytope keeps the active-set iterations off the
    highly degenerate vertex at zero. Incentive increments per unit risk are
    taken positive and strictly decreasing in mode; each epoch's row is
    shrunk as needed so that it stays strictly below the previous row shifted
    by one mode.
    """
    x = np.zeros(qp.horizon * qp.modes)
    rho = 0.5 * qp.gamma_max * (1.0 - np.arange(qp.modes) / (qp.modes + 1.0))
    previous = None
    for t in range(qp.horizon):
        row = np.cumsum(rho * qp.risk_steps[t])
        if previous is not None and qp.modes > 1:
            ratio = float(np.min(previous[1:] / row[:-1]))
            row = row * min(1.0, 0.9 * ratio) if ratio <= 1.0 else row
        x[t * qp.modes:(t + 1) * qp.modes] = row
        previous = row
    if qp.G.size and np.max(qp.G @ x - qp.h) < 0:
        return x
    return np.zeros_like(x)


def solve_menu(qp: QPInstance, max_iter: Optional[int] = None) -> MenuSolution:
    """Globally optimal menu for a concave instance, with its KKT certificate.

    If the iteration cap is hit the best point found is returned with
    ``converged=False``.
    """
    res = solve_qp(-qp.hessian, -qp.linear, qp.G, qp.h, x0=interior_start(qp), max_iter=max_iter)
    x = res.x
    return MenuSolution(
        menu=qp.menu(x),
        objective=qp.objective(x),
        kkt_residual=res.kkt_residual,
        iterations=res.iterations,
        converged=res.converged,
        max_violation=qp.max_violation(x),
        details={"active_constraints": len(res.active)},
    )


def optimize_menu(utilities: UtilityTable, risk: RiskModel, max_iter: Optional[int] = None) -> MenuSolution:
    """Assemble and solve the full-horizon QP."""
    return solve_menu(assemble_qp(utilities, risk), max_iter=max_iter)


def expected_profit(menu: IncentiveMenu, utilities: UtilityTable, risk: RiskModel,
                    cap_probs=None) -> ProfitBreakdown:
    """Expected net revenue per arrival at each epoch, and their sum.

    Uses the exact choice probabilities, so any prior and any menu (single
    crossing or not) is allowed. ``cap_probs[c]`` optionally gives the share
    of arrivals whose feasible modes stop at ``c``.
    """
    values = menu.values
    if values.shape != (utilities.horizon, utilities.mode_count):
        raise InputError("menu and utility table are not aligned")
    margin = utilities.values.copy()
    margin[:, 1:] -= values
    per_epoch = np.zeros(menu.horizon)
    for t in range(menu.horizon):
        r = risk.risk(t)
        if cap_probs is None:
            p = mode_probabilities(values[t], r, risk.prior.cdf)
        else:
            p = sum(w * mode_probabilities(values[t], r, risk.prior.cdf, cap=c)
                    for c, w in enumerate(cap_probs) if w)
        per_epoch[t] = float(p @ margin[t])
    return ProfitBreakdown(per_epoch, float(per_epoch.sum()))


# -- exhaustive grid oracle ---------------------------------------------------


def _grid_rows(risk_row: np.ndarray, gamma_max: float, step: float, budget: float) -> np.ndarray:
    """All grid menus for one epoch satisfying cap, monotonicity and single crossing.

    Returned as integer multiples of ``step``.
    """
    r = np.asarray(risk_row, dtype=float)
    dr = np.diff(np.concatenate([[0.0], r]))
    top = int(np.floor(gamma_max * r[0] / step + 1e-9))
    rows = np.arange(top + 1, dtype=np.int64)[:, None]
    for j in range(1, r.size):
        prev_inc = rows[:, -1] - (rows[:, -2] if j > 1 else 0)
        span = np.floor(prev_inc * dr[j] / dr[j - 1] + 1e-9).astype(np.int64)
        counts = span + 1
        total = int(counts.sum())
        if total > budget:
            raise SizeError(f"grid enumeration needs more than {budget:.0f} points")
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        offsets = np.arange(total, dtype=np.int64) - starts
        rows = np.repeat(rows, counts, axis=0)
        rows = np.concatenate([rows, (rows[:, -1] + offsets)[:, None]], axis=1)
    return rows


def brute_force_menu(utilities: UtilityTable, risk: RiskModel, step: float = 0.01,
                     budget: float = 1e8) -> MenuSolution:
    """Best menu on a ``step`` grid under the exact expected-profit objective.

    Every grid row satisfying the per-epoch constraints is scored; the
    diminishing-payoff coupling between consecutive epochs is handled by
    dynamic programming over epochs with a running-max table, so the search
    is exhaustive over the whole grid without enumerating its product.
    """
    gamma_max = _uniform_gamma_max(risk)
    if step <= 0:
        raise InputError("step must be positive")
    horizon, modes = utilities.horizon, utilities.mode_count
    rows, scores = [], []
    used = 0
    for t in range(horizon):
        grid = _grid_rows(risk.risk(t), gamma_max, step, budget - used)
        used += grid.shape[0]
        if used > budget:
            raise SizeError(f"grid enumeration needs more than {budget:.0f} points")
        inc = grid * step
        p = mode_probabilities(inc, risk.risk(t), risk.prior.cdf)
        margin = utilities.values[t][None, :] - np.concatenate([np.zeros((inc.shape[0], 1)), inc], axis=1)
        rows.append(grid)
        scores.append((p * margin).sum(axis=1))

    # value[t][i]: best achievable from epoch t onward when row i is posted at t
    value = [None] * horizon
    value[-1] = scores[-1]
    for t in range(horizon - 2, -1, -1):
        value[t] = scores[t] + _best_successor(rows[t], rows[t + 1], value[t + 1], budget - used)

    chosen = [int(np.argmax(value[0]))]
    for t in range(1, horizon):
        prev = rows[t - 1][chosen[-1]]
        ok = np.all(rows[t][:, :modes - 1] <= prev[1:], axis=1) if modes > 1 else np.ones(len(rows[t]), bool)
        cand = np.where(ok, value[t], -np.inf)
        chosen.append(int(np.argmax(cand)))
    menu = IncentiveMenu(np.array([rows[t][i] * step for t, i in enumerate(chosen)]))
    objective = expected_profit(menu, utilities, risk).total
    return MenuSolution(menu, objective, float("nan"), used, details={"grid_value": float(value[0].max())})


def _best_successor(cur: np.ndarray, nxt: np.ndarray, nxt_value: np.ndarray, budget: float) -> np.ndarray:
    """For each row of ``cur``, the best ``nxt_value`` over rows with ``nxt[m] <= cur[m+1]``."""
    modes = cur.shape[1]
    if modes == 1:
        return np.full(cur.shape[0], nxt_value.max())
    keys = nxt[:, :modes - 1]
    shape = tuple(int(v) + 1 for v in keys.max(axis=0))
    if np.prod(shape, dtype=float) > budget:
        raise SizeError("dynamic-programming table exceeds the point budget")
    table = np.full(shape, -np.inf)
    np.maximum.at(table, tuple(keys.T), nxt_value)
    for axis in range(len(shape)):
        table = np.maximum.accumulate(table, axis=axis)
    bounds = cur[:, 1:]
    idx = tuple(np.minimum(bounds[:, j], shape[j] - 1) for j in range(modes - 1))
    return table[idx]
