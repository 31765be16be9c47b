"""One-dimensional search over the common-message power.

At every common power on the grid the rate split and private powers are
available in closed form, so the global optimum is the best grid point.
The grid runs from the SIC lower bound ``P/2 + (theta + sigma^2)/(2 h_1)``
to ``P`` in steps of ``xi``; the upper end is always included.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model import (
    EmptyP0Range,
    Infeasible,
    NetworkInstance,
    PowerAllocation,
    PowerBudgetInfeasible,
    RsmaSolution,
    SolverParams,
    common_rate,
    private_rates,
)
from .private_power import LN2, optimal_private_power, p_min_vector
from .rate_alloc import common_term, split_batch

__all__ = [
    "SearchTrace",
    "p0_bounds",
    "default_xi",
    "p0_grid",
    "assemble_solution",
    "solve_rsma",
    "solve_two_user_fast",
    "solve_rsma_auto",
]

GRID_POINTS = 2000


@dataclass(frozen=True, eq=False)
class SearchTrace:
    """Objective along the common-power grid (``-inf`` where infeasible)."""

    p0_grid: np.ndarray
    objective_at_p0: np.ndarray
    best_index: int
    path: str
    candidate_evaluations: int

    def summary(self) -> dict:
        feasible = np.isfinite(self.objective_at_p0)
        return {
            "path": self.path,
            "grid_points": int(self.p0_grid.size),
            "feasible_points": int(feasible.sum()),
            "p0_range_w": [float(self.p0_grid[0]), float(self.p0_grid[-1])],
            "best_p0_w": float(self.p0_grid[self.best_index]),
            "candidate_evaluations": int(self.candidate_evaluations),
        }


def p0_bounds(inst: NetworkInstance) -> Tuple[float, float]:
    """Admissible common powers ``[lower, upper]``; empty when lower > upper."""
    lower = inst.p_max / 2.0 + (inst.theta + inst.sigma2) / (2.0 * inst.h[0])
    return float(lower), float(inst.p_max)


def default_xi(inst: NetworkInstance) -> float:
    lower, upper = p0_bounds(inst)
    return max(upper - lower, 0.0) / GRID_POINTS


def p0_grid(inst: NetworkInstance, xi: Optional[float] = None) -> np.ndarray:
    """``lower, lower + xi, ...`` strictly below ``P``, then ``P`` itself."""
    lower, upper = p0_bounds(inst)
    if lower > upper:
        raise EmptyP0Range(
            f"SIC lower bound {lower:.6g} W exceeds the power budget {upper:.6g} W",
            constraint="sic", lower=lower, upper=upper,
        )
    xi = default_xi(inst) if xi is None else float(xi)
    if upper == lower or xi <= 0:
        return np.array([upper])
    steps = int(np.ceil((upper - lower) / xi))
    grid = lower + xi * np.arange(steps)
    grid = grid[grid < upper]
    return np.append(grid, upper)


def assemble_solution(
    inst: NetworkInstance,
    p0: float,
    a: np.ndarray,
    params: SolverParams,
    path: str = "general",
) -> RsmaSolution:
    """Powers and per-user rates for a capped split ``a`` at common power ``p0``.

    Any common rate left unassigned by the split is credited to the
    distinguished user, so the reported shares add up to the common rate.
    """
    res = optimal_private_power(inst, a, p0, params.eps_power, params.eps_rate)
    powers = PowerAllocation(p0, res.p_priv)
    c1 = common_rate(inst, powers)
    rates = np.clip(np.asarray(a, dtype=float), 0.0, inst.r_min)
    rates[res.k_star] += max(c1 - float(rates.sum()), 0.0)
    totals = rates + private_rates(inst, powers)
    return RsmaSolution(
        rates=rates,
        powers=powers,
        k_star=res.k_star,
        common_rate_c1=c1,
        user_total_rates=totals,
        sum_rate=float(np.sum(totals)),
        fast_path=path,
    )


def _infeasible_report(inst: NetworkInstance, lower: float, params: SolverParams) -> Infeasible:
    # Most optimistic split at the lower bound: common rate spent on the
    # weakest users first (the greedy fill), which minimises the power need.
    c1 = common_term(inst, lower)
    order = np.argsort(-inst.noise_over_gain, kind="stable")
    a = np.zeros(inst.num_users)
    left = c1
    for j in order:
        a[j] = min(inst.r_min[j], left)
        left -= a[j]
    need = float(np.sum(p_min_vector(inst, a, lower)))
    budget = inst.p_max - lower
    return PowerBudgetInfeasible(
        f"rate demands cannot be met: minimum private power {need:.6g} W "
        f"exceeds the budget {budget:.6g} W at p0={lower:.6g} W",
        constraint="min_rate_demand", p0=lower, need=need, budget=budget, c1=c1,
    )


def solve_rsma(
    inst: NetworkInstance,
    params: Optional[SolverParams] = None,
    method: str = "enumerate",
) -> Tuple[RsmaSolution, SearchTrace]:
    """Globally optimal RSMA rate split and power control by grid search on p0.

    ``method="enumerate"`` evaluates every corner candidate at each grid
    point; ``method="equal"`` uses the greedy equal-demand split instead.

    Raises
    ------
    EmptyP0Range
        The SIC bound leaves no admissible common power.
    Infeasible
        No grid point admits a feasible rate split.
    """
    params = params or SolverParams()
    grid = p0_grid(inst, params.xi)
    c1 = common_term(inst, grid)
    obj, splits, _, evals = split_batch(inst, grid, c1, params, method)
    total = np.where(np.isfinite(obj), c1 + obj, -np.inf)
    if not np.any(np.isfinite(total)):
        raise _infeasible_report(inst, float(grid[0]), params)
    best = int(np.argmax(total))
    path = "equal_demand" if method == "equal" else "general"
    sol = assemble_solution(inst, float(grid[best]), splits[best], params, path)
    trace = SearchTrace(grid, total, best, path, evals)
    return sol, trace


def solve_two_user_fast(
    inst: NetworkInstance, params: Optional[SolverParams] = None
) -> RsmaSolution:
    """Closed-form optimum for two users with equal demand ``R``.

    User 0's demand is carried entirely by the common message and the
    common power is the smallest one meeting both that and the SIC bound.
    """
    params = params or SolverParams()
    if inst.num_users != 2 or not inst.equal_demand(params.eps_rate):
        raise ValueError("fast path needs exactly two users with equal demands")
    lower, upper = p0_bounds(inst)
    if lower > upper:
        raise EmptyP0Range(
            f"SIC lower bound {lower:.6g} W exceeds the power budget {upper:.6g} W",
            constraint="sic", lower=lower, upper=upper,
        )
    r = float(inst.r_min[0])
    p_common = -np.expm1(-r * LN2 / inst.bandwidth) * (inst.p_max + inst.noise_over_gain[0])
    p0 = max(float(p_common), lower)
    if p0 > upper:
        raise PowerBudgetInfeasible(
            f"common message cannot carry {r:.6g} bit/s within the budget",
            constraint="common_rate", p0=p0,
        )
    return assemble_solution(inst, p0, np.array([r, 0.0]), params, "two_user_fast")


def solve_rsma_auto(
    inst: NetworkInstance, params: Optional[SolverParams] = None
) -> Tuple[RsmaSolution, SearchTrace]:
    """Dispatch to the cheapest exact path for the instance.

    Two users with equal demands take the closed form; if that point is
    infeasible (the strong user's demand binds) the grid search runs
    instead.  Equal demands use the greedy split per grid point; anything
    else enumerates corners.
    """
    params = params or SolverParams()
    equal = inst.equal_demand(params.eps_rate)
    if inst.num_users == 2 and equal:
        try:
            sol = solve_two_user_fast(inst, params)
        except PowerBudgetInfeasible:
            pass
        else:
            trace = SearchTrace(
                np.array([sol.powers.p0]), np.array([sol.sum_rate]), 0, sol.fast_path, 0
            )
            return sol, trace
    return solve_rsma(inst, params, method="equal" if equal else "enumerate")
