"""Comparison schemes: broadcast without rate splitting, NOMA and OFDMA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Infeasible, NetworkInstance, PowerAllocation

__all__ = [
    "BaselineSolution",
    "solve_broadcast",
    "solve_noma",
    "noma_rates",
    "noma_region_boundary",
    "solve_ofdma",
    "ofdma_rates",
    "SCHEMES",
]

BROADCAST, NOMA, OFDMA = "Broadcast", "NOMA", "OFDMA"
SCHEMES = (BROADCAST, NOMA, OFDMA)


@dataclass(frozen=True, eq=False)
class BaselineSolution:
    scheme: str
    powers: PowerAllocation
    user_total_rates: np.ndarray
    sum_rate: float


def _solution(scheme, p, rates) -> BaselineSolution:
    return BaselineSolution(scheme, PowerAllocation(0.0, p), rates, float(np.sum(rates)))


def solve_broadcast(inst: NetworkInstance) -> BaselineSolution:
    """Sum-rate optimum of the broadcast channel, private messages only.

    Every user except one gets the least power meeting its demand with the
    whole budget in use; the one minimising ``2^(-R_j/B) (P + sigma^2/h_j)``
    takes the rest.
    """
    bw, big_p = inst.bandwidth, inst.p_max
    nog = inst.noise_over_gain
    scale = np.exp2(-inst.r_min / bw)
    floor = (1.0 - scale) * (big_p + nog)
    if floor.sum() > big_p:
        raise Infeasible(
            f"broadcast demands need {floor.sum():.6g} W > {big_p:.6g} W",
            constraint="min_rate_demand",
        )
    score = np.log2(scale) + np.log2(big_p + nog)
    k = int(np.flatnonzero(score <= score.min() + 1e-12)[-1])
    p = floor.copy()
    p[k] = big_p - (floor.sum() - floor[k])
    interference = p.sum() - p
    rates = bw * np.log2(1.0 + inst.h * p / (inst.h * interference + inst.sigma2))
    return _solution(BROADCAST, p, rates)


def noma_rates(inst: NetworkInstance, p) -> np.ndarray:
    """Rates under ascending-gain SIC: user j sees only users above it."""
    p = np.asarray(p, dtype=float)
    above = np.cumsum(p[::-1])[::-1] - p
    return inst.bandwidth * np.log2(1.0 + inst.h * p / (inst.h * above + inst.sigma2))


def solve_noma(inst: NetworkInstance) -> BaselineSolution:
    """Downlink NOMA with a SIC power gap at every cancelled layer.

    Layers are peeled from the weakest user up.  Layer ``j`` keeps the least
    power that both meets its demand against the layers above it and leaves
    the SIC gap ``h_j (p_j - sum_{i>j} p_i) >= theta + sigma^2``; all power
    left over goes up the stack, the strongest user taking the remainder.
    Moving power upward only raises the sum-rate, so this greedy peel is
    optimal for the model.
    """
    k = inst.num_users
    bw = inst.bandwidth
    nog = inst.noise_over_gain
    gap = (inst.theta + inst.sigma2) / inst.h
    p = np.zeros(k)
    remaining = inst.p_max
    for j in range(k - 1):
        above_rate = (remaining + nog[j]) * np.exp2(-inst.r_min[j] / bw) - nog[j]
        above_sic = (remaining - gap[j]) / 2.0
        above = min(above_rate, above_sic)
        if above < 0:
            which = "min_rate_demand" if above_rate < above_sic else "sic"
            raise Infeasible(f"NOMA layer {j} cannot be served ({which})", constraint=which, layer=j)
        p[j] = remaining - above
        remaining = above
    p[-1] = remaining
    need = np.expm1(inst.r_min[-1] * np.log(2.0) / bw) * nog[-1]
    if remaining < need * (1 - 1e-12):
        raise Infeasible(
            f"NOMA layer {k - 1} cannot reach its demand", constraint="min_rate_demand", layer=k - 1
        )
    return _solution(NOMA, p, noma_rates(inst, p))


def noma_region_boundary(inst: NetworkInstance, r1_targets) -> np.ndarray:
    """Two-user NOMA rate-region boundary in closed form.

    ``r1`` is the weak user (index 0).  For each target ``t`` the strong
    user's power is the largest that keeps the weak user at ``t`` and
    respects the SIC gap; the returned value is the strong user's rate.
    Targets above the weak user's single-user rate give NaN.
    """
    if inst.num_users != 2:
        raise ValueError("rate region needs exactly two users")
    t = np.asarray(r1_targets, dtype=float)
    bw, big_p = inst.bandwidth, inst.p_max
    nog = inst.noise_over_gain
    gap = (inst.theta + inst.sigma2) / inst.h[0]
    p2 = np.minimum((big_p + nog[0]) * np.exp2(-t / bw) - nog[0], (big_p - gap) / 2.0)
    p2 = np.clip(p2, 0.0, big_p)
    r2 = bw * np.log2(1.0 + p2 / nog[1])
    r1_max = bw * np.log2(1.0 + big_p / nog[0])
    return np.where(t <= r1_max * (1 + 1e-12), r2, np.nan)


def ofdma_rates(inst: NetworkInstance, p) -> np.ndarray:
    k = inst.num_users
    gain = k * inst.h / inst.sigma2
    return inst.bandwidth / k * np.log2(1.0 + gain * np.asarray(p, dtype=float))


def solve_ofdma(inst: NetworkInstance, rtol: float = 1e-10) -> BaselineSolution:
    """Equal bandwidth split with water-filling above the demand floors.

    Each user gets ``B/K`` of the band and ``sigma^2/K`` of the noise.  The
    floors meet the demands; the rest of the budget is poured on with a
    common water level found by bisection.
    """
    k = inst.num_users
    bw = inst.bandwidth
    inv_gain = inst.sigma2 / (k * inst.h)
    floor = np.expm1(inst.r_min * k * np.log(2.0) / bw) * inv_gain
    if floor.sum() > inst.p_max:
        raise Infeasible(
            f"OFDMA demands need {floor.sum():.6g} W > {inst.p_max:.6g} W",
            constraint="min_rate_demand",
        )

    def alloc(level):
        return np.maximum(floor, level - inv_gain)

    lo = float(np.min(floor + inv_gain))
    hi = float(np.max(floor + inv_gain)) + inst.p_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if alloc(mid).sum() > inst.p_max:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * hi:
            break
    p = alloc(lo)
    # hand the bisection leftover to the users above their floors
    above = p > floor
    if np.any(above):
        p[above] += (inst.p_max - p.sum()) / above.sum()
    return _solution(OFDMA, p, ofdma_rates(inst, p))
