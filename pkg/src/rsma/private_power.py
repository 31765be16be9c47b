"""Optimal private powers for a fixed rate split and common power.

With the common power ``p0`` and the common-rate shares ``a`` fixed, every
user but one receives exactly the private power that tops its common share
up to its demand; the remaining budget goes to the single distinguished
user ``k_star``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    NetworkInstance,
    PowerBudgetInfeasible,
    RateCapViolation,
    as_vector,
)

__all__ = [
    "PrivatePowerResult",
    "p_min",
    "p_min_vector",
    "feasible_rate_power",
    "select_k_star",
    "private_sum_closed_form",
    "optimal_private_power",
]

LN2 = np.log(2.0)
# Ties in the distinguished-user argmin are resolved on log2 values.
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PrivatePowerResult:
    p_priv: np.ndarray
    k_star: int
    private_sum_rate: float


def _weights(inst: NetworkInstance, p0):
    # P - p0 + sigma^2/h_k, broadcast against p0 on the leading axes.
    return (inst.p_max - np.asarray(p0, dtype=float))[..., None] + inst.noise_over_gain


def _deficit_factor(a, r, bandwidth):
    # 1 - 2^((a - R)/B), accurate when a is close to R.
    return -np.expm1((np.asarray(a) - r) * (LN2 / bandwidth))


def p_min(inst: NetworkInstance, a_k: float, p0: float, k: int) -> float:
    """Private power that lets user ``k`` reach its demand given share ``a_k``."""
    r_k = inst.r_min[k]
    if a_k > r_k:
        raise RateCapViolation(
            f"user {k}: common share {a_k} exceeds demand {r_k}",
            constraint="rate_cap", user=k,
        )
    if a_k < 0:
        raise ValueError("common-rate share must be nonnegative")
    w = inst.p_max - p0 + inst.noise_over_gain[k]
    return float(_deficit_factor(a_k, r_k, inst.bandwidth) * w)


def p_min_vector(inst: NetworkInstance, a, p0) -> np.ndarray:
    """Vectorised ``p_min`` for all users; no domain checks.

    ``a`` may carry leading batch axes; ``p0`` broadcasts against them.
    """
    # + 0.0 turns the -0.0 produced at a_k == R_k into 0.0
    return _deficit_factor(a, inst.r_min, inst.bandwidth) * _weights(inst, p0) + 0.0


def feasible_rate_power(inst: NetworkInstance, a, p0: float, eps_power: float = 1e-12) -> bool:
    """True iff the minimum private powers fit into ``P - p0``."""
    a = as_vector(a, inst.num_users)
    need = float(np.sum(p_min_vector(inst, a, p0)))
    return need <= inst.p_max - p0 + eps_power


def _k_star_batch(inst: NetworkInstance, a, p0) -> np.ndarray:
    score = (np.asarray(a) - inst.r_min) / inst.bandwidth + np.log2(_weights(inst, p0))
    best = np.min(score, axis=-1, keepdims=True)
    near = score <= best + TIE_TOL
    k = score.shape[-1]
    # Last index among the near-minimal entries (highest channel gain).
    return k - 1 - np.argmax(near[..., ::-1], axis=-1)


def select_k_star(inst: NetworkInstance, a, p0: float) -> int:
    """Index of the user that takes the leftover private power.

    Minimises ``2^((a_j - R_j)/B) (P - p0 + sigma^2/h_j)``; the comparison
    is done on the log2 of that product and ties go to the largest index.
    """
    a = as_vector(a, inst.num_users)
    return int(_k_star_batch(inst, a, p0))


def private_sum_closed_form(inst: NetworkInstance, a, p0: float, k: int) -> float:
    """Private sum-rate when ``k`` takes the leftover and the rest sit at p_min."""
    a = as_vector(a, inst.num_users)
    pm = p_min_vector(inst, a, p0)
    others = np.arange(inst.num_users) != k
    w_k = inst.p_max - p0 + inst.noise_over_gain[k]
    denom = float(np.sum(pm[others])) + inst.noise_over_gain[k]
    gap = float(np.sum(inst.r_min[others] - a[others]))
    return inst.bandwidth * float(np.log2(w_k / denom)) + gap


def optimal_private_power(
    inst: NetworkInstance,
    a,
    p0: float,
    eps_power: float = 1e-12,
    eps_rate: float = 1e-6,
) -> PrivatePowerResult:
    """Closed-form maximiser of the private sum-rate for fixed ``(a, p0)``.

    Raises
    ------
    RateCapViolation
        Some ``a_k`` exceeds ``R_k`` by more than ``eps_rate``.
    PowerBudgetInfeasible
        The minimum private powers exceed ``P - p0``.
    """
    a = as_vector(a, inst.num_users)
    over = np.flatnonzero(a > inst.r_min + eps_rate)
    if over.size:
        k = int(over[0])
        raise RateCapViolation(
            f"user {k}: common share {a[k]:.6g} exceeds demand {inst.r_min[k]:.6g}",
            constraint="rate_cap", user=k,
        )
    if np.any(a < -eps_rate):
        raise ValueError("common-rate shares must be nonnegative")
    a = np.clip(a, 0.0, inst.r_min)

    budget = inst.p_max - p0
    pm = p_min_vector(inst, a, p0)
    need = float(np.sum(pm))
    if need > budget + eps_power:
        raise PowerBudgetInfeasible(
            f"minimum private powers {need:.6g} W exceed the budget {budget:.6g} W",
            constraint="private_power_budget", need=need, budget=budget,
        )

    k = select_k_star(inst, a, p0)
    p = pm.copy()
    p[k] = max(budget - (need - pm[k]), 0.0)
    return PrivatePowerResult(
        p_priv=p,
        k_star=k,
        private_sum_rate=private_sum_closed_form(inst, a, p0, k),
    )
