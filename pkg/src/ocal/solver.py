"""Working-set-of-two solver for the signed SVDD-family dual.

The solver minimizes

    ½ αᵀQα + pᵀα,   Q_ij = 2 s_i s_j K_ij,   p_i = −s_i K_ii − λ l_i

subject to Σ s_i α_i = 1 and 0 ≤ α_i ≤ C_i, where s ∈ {+1, −1} is the orientation of a
point (−1 for labeled outliers) and l marks labeled points. λ is zero except for SSAD,
where it is the multiplier of the labeled-mass constraint Σ_{l_i=1} α_i ≥ κ and equals
the primal margin τ.

The first index of a pair is the maximal KKT violator; its partner is the violator with
the largest second-order decrease of the objective. Ties resolve to the lowest index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from ocal import constants
from ocal.errors import SolverError

logger = logging.getLogger(__name__)

# curvature floor for pairs of identical points
_TAU = 1e-12
_MAX_LAMBDA = 1e8


@dataclass(frozen=True)
class DualSolution:
    """Result of one dual solve."""

    alpha: np.ndarray
    iterations: int
    gap: float
    multiplier: float = 0.0
    mass_shortfall: bool = False


def _initial_alpha(signs: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Fill positive points in index order until Σ s_i α_i = 1."""
    alpha = np.zeros_like(upper)
    remaining = 1.0
    for i in np.flatnonzero(signs > 0):
        take = min(upper[i], remaining)
        alpha[i] = take
        remaining -= take
        if remaining <= 0.0:
            break
    if remaining > 1e-12:
        raise SolverError(
            "Dual is infeasible: positive-point costs sum to less than 1",
            kkt_violation=remaining,
            iterations=0,
        )
    return alpha


def solve_signed_dual(
    K: np.ndarray,
    signs: np.ndarray,
    upper: np.ndarray,
    linear: Optional[np.ndarray] = None,
    tol: float = constants.KKT_TOL,
    max_iter: int = constants.MAX_SOLVER_ITER,
    alpha0: Optional[np.ndarray] = None,
) -> DualSolution:
    """Solve the signed dual by sequential pair updates.

    Args:
        K: Kernel matrix of the training points.
        signs: +1 / −1 orientation per point.
        upper: Box bound per point.
        linear: Extra linear term added to p (−λ·l for SSAD).
        tol: Stop once the maximal violating pair differs by less than ``tol``.
        max_iter: Maximum number of pair updates.
        alpha0: Feasible starting point; defaults to an index-order fill.

    Raises:
        SolverError: If the problem is infeasible or ``max_iter`` is exhausted.
    """
    y = np.asarray(signs, dtype=float)
    C = np.asarray(upper, dtype=float)
    n = y.size
    alpha = _initial_alpha(y, C) if alpha0 is None else np.array(alpha0, dtype=float)

    diag = np.diag(K).astype(float)
    QD = 2.0 * diag
    p = -y * diag
    if linear is not None:
        p = p + linear

    beta = y * alpha
    support = np.flatnonzero(alpha)
    G = 2.0 * y * (K[:, support] @ beta[support]) + p

    gap = np.inf
    iterations = 0
    while iterations < max_iter:
        score = -y * G
        up = np.where(y > 0, alpha < C, alpha > 0.0)
        low = np.where(y > 0, alpha > 0.0, alpha < C)
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.argmax(np.where(up, score, -np.inf)))
        g_max = score[i]
        gap = float(g_max - np.min(np.where(low, score, np.inf)))
        if gap < tol:
            break

        Ki = K[i]
        # partner j maximizes the second-order decrease b²/a among violating pairs
        b = np.where(low, g_max - score, 0.0)
        a = QD[i] + QD - 4.0 * Ki
        a = np.where(a > 0, a, _TAU)
        j = int(np.argmax(np.where(b > 0, b * b / a, -1.0)))

        Kj = K[j]
        Qij = 2.0 * y[i] * y[j] * Ki[j]
        old_i, old_j = alpha[i], alpha[j]
        Ci, Cj = C[i], C[j]

        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Qij
            quad = quad if quad > 0 else _TAU
            delta = (-G[i] - G[j]) / quad
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai, aj = Ci, Ci - diff
            elif aj > Cj:
                aj, ai = Cj, Cj + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Qij
            quad = quad if quad > 0 else _TAU
            delta = (G[i] - G[j]) / quad
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > Ci:
                if ai > Ci:
                    ai, aj = Ci, total - Ci
            elif aj < 0:
                aj, ai = 0.0, total
            if total > Cj:
                if aj > Cj:
                    aj, ai = Cj, total - Cj
            elif ai < 0:
                ai, aj = 0.0, total

        alpha[i], alpha[j] = ai, aj
        d_i, d_j = ai - old_i, aj - old_j
        G += 2.0 * y * (y[i] * d_i * Ki + y[j] * d_j * Kj)
        iterations += 1
    else:
        raise SolverError("Dual solver did not converge", kkt_violation=gap, iterations=iterations)

    np.clip(alpha, 0.0, C, out=alpha)
    logger.debug("dual solved: n=%d iterations=%d gap=%.2e", n, iterations, gap)
    return DualSolution(alpha=alpha, iterations=iterations, gap=gap)


def max_labeled_mass(signs: np.ndarray, upper: np.ndarray, labeled: np.ndarray) -> float:
    """Return the largest Σ_{labeled} α_i compatible with Σ s_i α_i = 1 and the box."""
    res = linprog(
        c=-np.asarray(labeled, dtype=float),
        A_eq=np.asarray(signs, dtype=float)[None, :],
        b_eq=[1.0],
        bounds=list(zip(np.zeros_like(upper), upper)),
        method="highs",
    )
    if not res.success:
        raise SolverError(f"Dual is infeasible: {res.message}", kkt_violation=np.inf, iterations=0)
    return float(-res.fun)


def solve_with_labeled_mass(
    K: np.ndarray,
    signs: np.ndarray,
    upper: np.ndarray,
    labeled: np.ndarray,
    kappa: float,
    tol: float = constants.KKT_TOL,
    max_iter: int = constants.MAX_SOLVER_ITER,
) -> DualSolution:
    """Solve the SSAD dual, which adds Σ_{labeled} α_i ≥ κ to the signed dual.

    The labeled-mass constraint is moved into the objective with multiplier λ ≥ 0. The
    labeled mass of the penalized solution is nondecreasing in λ, so the smallest λ that
    reaches κ is found by doubling and bisection, each solve warm-started from the last.
    When κ exceeds the attainable mass, the target drops to just below the attainable
    maximum and the solution is flagged with ``mass_shortfall``.
    """
    l = np.asarray(labeled, dtype=float)
    if kappa <= 0 or not l.any():
        return solve_signed_dual(K, signs, upper, tol=tol, max_iter=max_iter)

    total_iter = 0

    def at(lam: float, start: Optional[np.ndarray]) -> DualSolution:
        nonlocal total_iter
        sol = solve_signed_dual(
            K, signs, upper, linear=-lam * l, tol=tol, max_iter=max_iter, alpha0=start
        )
        total_iter += sol.iterations
        return sol

    def mass(sol: DualSolution) -> float:
        return float(l @ sol.alpha)

    best = at(0.0, None)
    if mass(best) >= kappa - tol:
        return DualSolution(best.alpha, total_iter, best.gap, multiplier=0.0)

    shortfall = False
    attainable = max_labeled_mass(signs, upper, l)
    if kappa > attainable - 10 * tol:
        shortfall = True
        kappa = attainable - 10 * tol
        logger.warning(
            "κ exceeds the attainable labeled mass %.4g; targeting the maximum instead",
            attainable,
        )

    lo, hi = 0.0, 1.0
    hi_sol = at(hi, best.alpha.copy())
    while mass(hi_sol) < kappa - tol and hi < _MAX_LAMBDA:
        lo, hi = hi, 2.0 * hi
        hi_sol = at(hi, hi_sol.alpha.copy())

    while hi - lo > 1e-10 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        mid_sol = at(mid, hi_sol.alpha.copy())
        if mass(mid_sol) >= kappa - tol:
            hi, hi_sol = mid, mid_sol
            if mass(mid_sol) - kappa <= tol:
                break
        else:
            lo = mid

    return DualSolution(
        hi_sol.alpha, total_iter, hi_sol.gap, multiplier=hi, mass_shortfall=shortfall
    )
