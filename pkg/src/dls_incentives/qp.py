"""Primal active-set solver for strictly convex inequality-constrained QPs.

Solves ``min 0.5 x'Px + q'x  s.t.  A x <= b`` from a feasible start, and
reports a KKT certificate for the returned point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import InputError


@dataclass
class QPResult:
    x: np.ndarray
    multipliers: np.ndarray
    active: list
    iterations: int
    converged: bool
    kkt_residual: float


def kkt_residual(P, q, A, b, x, lam) -> float:
    """Largest violation among stationarity, primal/dual feasibility and complementarity."""
    stationarity = P @ x + q + A.T @ lam if A.size else P @ x + q
    slack = b - A @ x if A.size else np.zeros(0)
    parts = [np.abs(stationarity).max(initial=0.0)]
    if slack.size:
        parts.append(np.maximum(-slack, 0.0).max())
        parts.append(np.maximum(-lam, 0.0).max())
        parts.append(np.abs(lam * slack).max())
    return float(max(parts))


def solve_qp(P, q, A, b, x0: Optional[np.ndarray] = None, max_iter: Optional[int] = None,
             step_tol: float = 1e-12, mult_tol: float = 1e-12) -> QPResult:
    """Active-set iterations from a feasible ``x0`` (default the origin).

    Each iteration minimises the objective on the current working set via
    the Schur complement ``A_W P^-1 A_W'``, then either takes the longest
    feasible step along the result, adding the first blocking constraint, or
    drops the constraint with the most negative multiplier. After many
    iterations the drop rule switches to lowest index to avoid cycling on
    degenerate vertices.
    """
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, q.size)
    b = np.asarray(b, dtype=float)
    n, m = q.size, b.size
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if m and np.any(A @ x > b + 1e-9):
        raise InputError("solve_qp needs a feasible starting point")
    if max_iter is None:
        max_iter = 50 * (n + m) + 100
    bland_after = 10 * (n + m)

    p_inv = np.linalg.inv(P)
    p_inv = 0.5 * (p_inv + p_inv.T)
    a_pinv = A @ p_inv
    schur_all = a_pinv @ A.T
    scale = max(1.0, np.abs(A).max(initial=0.0))

    working: list[int] = []
    in_w = np.zeros(m, dtype=bool)
    lam_w = np.zeros(0)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = P @ x + q
        if working:
            v = a_pinv[working] @ g
            schur = schur_all[np.ix_(working, working)]
            try:
                lam_w = -np.linalg.solve(schur, v)
            except np.linalg.LinAlgError:
                lam_w = -np.linalg.lstsq(schur, v, rcond=None)[0]
            p = -(p_inv @ (g + A[working].T @ lam_w))
        else:
            lam_w = np.zeros(0)
            p = -(p_inv @ g)

        if np.abs(p).max(initial=0.0) <= step_tol * (1.0 + np.abs(x).max(initial=0.0)):
            if lam_w.size == 0 or lam_w.min() >= -mult_tol:
                converged = True
                break
            if it > bland_after:
                drop = int(np.nonzero(lam_w < -mult_tol)[0][0])
            else:
                drop = int(np.argmin(lam_w))
            in_w[working[drop]] = False
            del working[drop]
            continue

        ap = A @ p
        slack = np.maximum(b - A @ x, 0.0)
        blocking = np.nonzero(~in_w & (ap > 1e-13 * scale * max(1.0, np.abs(p).max())))[0]
        alpha, hit = 1.0, -1
        if blocking.size:
            ratios = slack[blocking] / ap[blocking]
            k = int(np.argmin(ratios))
            if ratios[k] < 1.0:
                alpha, hit = float(ratios[k]), int(blocking[k])
        x = x + alpha * p
        if hit >= 0:
            working.append(hit)
            in_w[hit] = True

    lam = np.zeros(m)
    if working:
        if lam_w.size != len(working):
            g = P @ x + q
            lam_w = -np.linalg.lstsq(schur_all[np.ix_(working, working)], a_pinv[working] @ g, rcond=None)[0]
        lam[working] = lam_w
    return QPResult(x, lam, sorted(working), it, converged, kkt_residual(P, q, A, b, x, lam))
