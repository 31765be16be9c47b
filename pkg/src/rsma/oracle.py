"""Brute-force reference solver for small instances.

The oracle knows nothing about the closed forms.  It grids the raw problem
directly, with common power, private powers and common-rate shares as
variables, the plain rate formulas as objective, and every constraint
checked as written: common rate budget, per-user demand, SIC gap, total
power, nonnegativity.

For a fixed power vector the best shares are an LP with an obvious
solution.  Each user needs ``max(0, R_k - r_k)`` from the common message,
the common message carries at most ``c_1``, and the objective grows with
``sum(a)``.  By default that inner problem is solved exactly
(``inner="exact"``).  ``inner="grid"`` grids the shares as well, which is
only affordable for one or two users.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Infeasible, NetworkInstance, PowerAllocation, RsmaSolution
from .private_power import p_min_vector
from .search import SearchTrace

__all__ = [
    "OracleConfig",
    "OracleResult",
    "oracle_solve",
    "oracle_rate_region",
    "dominance_slack",
    "check_solution",
]

MAX_USERS = 3


@dataclass(frozen=True)
class OracleConfig:
    grid_a: int = 21
    grid_p: int = 41
    refine_rounds: int = 4
    shrink: float = 0.25
    refine_points: int = 11
    seeds: int = 3
    inner: str = "exact"
    eps_rate: float = 1e-6
    eps_power: float = 1e-12

    def __post_init__(self):
        if min(self.grid_a, self.grid_p, self.refine_points) < 2 or self.refine_rounds < 0:
            raise ValueError("grid sizes must be at least 2")
        if self.inner not in ("exact", "grid"):
            raise ValueError("inner must be 'exact' or 'grid'")


@dataclass(frozen=True, eq=False)
class OracleResult:
    a: np.ndarray
    powers: PowerAllocation
    objective: float
    evaluations: int


def _rates(inst: NetworkInstance, pts: np.ndarray):
    """Common rate and private rates for power rows ``[p0, p_1..p_K]``."""
    p0 = pts[:, 0]
    pk = pts[:, 1:]
    s = pk.sum(axis=1)
    h, s2, bw = inst.h, inst.sigma2, inst.bandwidth
    c1 = bw * np.log2(1.0 + h[0] * p0 / (h[0] * s + s2))
    interference = s[:, None] - pk
    r = bw * np.log2(1.0 + h * pk / (h * interference + s2))
    return c1, r


def _power_ok(inst: NetworkInstance, pts: np.ndarray, eps_power: float):
    p0 = pts[:, 0]
    s = pts[:, 1:].sum(axis=1)
    ok = np.all(pts >= 0, axis=1)
    ok &= p0 + s <= inst.p_max + eps_power
    ok &= p0 - s >= (inst.theta + inst.sigma2) / inst.h[0] - eps_power
    return ok


def _evaluate_exact(inst, pts, cfg):
    c1, r = _rates(inst, pts)
    deficit = np.maximum(inst.r_min - r, 0.0).sum(axis=1)
    ok = _power_ok(inst, pts, cfg.eps_power) & (deficit <= c1 + cfg.eps_rate)
    obj = np.where(ok, c1 + r.sum(axis=1), -np.inf)
    return obj


def _evaluate_grid(inst, pts, cfg, a_grid):
    c1, r = _rates(inst, pts)
    ok_p = _power_ok(inst, pts, cfg.eps_power)
    sum_a = a_grid.sum(axis=1)
    ok = ok_p[:, None] & (sum_a[None, :] <= c1[:, None] + cfg.eps_rate)
    ok &= np.all(a_grid[None, :, :] + r[:, None, :] >= inst.r_min - cfg.eps_rate, axis=2)
    obj = np.where(ok, sum_a[None, :] + r.sum(axis=1)[:, None], -np.inf)
    return obj.max(axis=1)


def _shares_for(inst, pts_row, c1):
    _, r = _rates(inst, pts_row[None, :])
    a = np.maximum(inst.r_min - r[0], 0.0)
    a[-1] += max(c1 - a.sum(), 0.0)
    return a


def _box_grid_axes(axes):
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _box_grid(lo, hi, n):
    return _box_grid_axes([np.linspace(a, b, n) for a, b in zip(lo, hi)])


def oracle_solve(inst: NetworkInstance, cfg: Optional[OracleConfig] = None) -> OracleResult:
    """Best feasible grid point of the raw sum-rate problem.

    Coarse grid over ``[0, P]^(K+1)`` with the total-power constraint
    applied, then ``refine_rounds`` passes of a shrinking window around the
    ``seeds`` best coarse points.

    Raises
    ------
    ValueError
        More than three users.
    Infeasible
        No grid point is feasible.
    """
    cfg = cfg or OracleConfig()
    k = inst.num_users
    if k > MAX_USERS:
        raise ValueError(f"oracle is limited to {MAX_USERS} users")
    big_p = inst.p_max

    if cfg.inner == "grid":
        a_grid = _box_grid(np.zeros(k), inst.r_min, cfg.grid_a)

        def evaluate(pts):
            return _evaluate_grid(inst, pts, cfg, a_grid)
    else:
        def evaluate(pts):
            return _evaluate_exact(inst, pts, cfg)

    levels = np.linspace(0.0, big_p, cfg.grid_p)
    priv = _box_grid(np.zeros(k), np.full(k, big_p), cfg.grid_p)
    priv = priv[priv.sum(axis=1) <= big_p + cfg.eps_power]
    best_pts, best_obj = [], []
    evals = 0
    for p0 in levels:
        pts = np.column_stack([np.full(len(priv), p0), priv])
        pts = pts[p0 + pts[:, 1:].sum(axis=1) <= big_p + cfg.eps_power]
        if len(pts) == 0:
            continue
        obj = evaluate(pts)
        evals += len(pts)
        top = np.argsort(-obj)[: cfg.seeds]
        best_pts.append(pts[top])
        best_obj.append(obj[top])
    cand = np.concatenate(best_pts)
    cand_obj = np.concatenate(best_obj)
    order = np.argsort(-cand_obj)[: cfg.seeds]
    if not np.isfinite(cand_obj[order[0]]):
        raise Infeasible("oracle found no feasible grid point", constraint="grid")

    spacing = big_p / (cfg.grid_p - 1)
    incumbent, incumbent_obj = cand[order[0]], cand_obj[order[0]]
    for idx in order:
        if not np.isfinite(cand_obj[idx]):
            continue
        center, center_obj = cand[idx], cand_obj[idx]
        half = spacing
        for _ in range(cfg.refine_rounds):
            pts = _box_grid(
                np.clip(center - half, 0.0, big_p),
                np.clip(center + half, 0.0, big_p),
                cfg.refine_points,
            )
            obj = evaluate(pts)
            evals += len(pts)
            j = int(np.argmax(obj))
            if obj[j] > center_obj:
                center, center_obj = pts[j], obj[j]
            half *= cfg.shrink
        if center_obj > incumbent_obj:
            incumbent, incumbent_obj = center, center_obj

    c1, _ = _rates(inst, incumbent[None, :])
    powers = PowerAllocation(incumbent[0], incumbent[1:])
    return OracleResult(_shares_for(inst, incumbent, c1[0]), powers, float(incumbent_obj), evals)


def _region_axis(hi: float, n: int) -> np.ndarray:
    # Linear spacing plus a log-spaced tail so tiny powers are resolved too.
    return np.unique(np.concatenate([np.linspace(0.0, hi, n), hi * np.logspace(-9, 0, n)]))


def _axis_half(axis: np.ndarray, x: float) -> float:
    i = int(np.searchsorted(axis, x))
    lo = axis[max(i - 1, 0)]
    hi = axis[min(i + 1, axis.size - 1)]
    return max(x - lo, hi - x)


def _region_values(inst, scheme, pts, t, eps_power):
    """Strong-user rate at each power row for weak-user target ``t``.

    The full budget is always spent: for RSMA the leftover goes to the
    common message, for NOMA to the weak user's layer.  Either move can
    only raise both the rates and the SIC margin.
    """
    h, s2, bw, big_p = inst.h, inst.sigma2, inst.bandwidth, inst.p_max
    if scheme == "RSMA":
        full = np.column_stack([big_p - pts.sum(axis=1), pts])
        c1, r = _rates(inst, full)
        need = np.maximum(t - r[:, 0], 0.0)
        ok = _power_ok(inst, full, eps_power) & (need <= c1)
        return np.where(ok, c1 - need + r[:, 1], -np.inf)
    p2 = pts[:, 0]
    p1 = big_p - p2
    r1 = bw * np.log2(1.0 + h[0] * p1 / (h[0] * p2 + s2))
    r2 = bw * np.log2(1.0 + h[1] * p2 / s2)
    gap_ok = (p2 <= 0) | (h[0] * (p1 - p2) >= inst.theta + s2 - eps_power * h[0])
    ok = (p1 >= 0) & (p2 >= 0) & gap_ok & (r1 >= t)
    return np.where(ok, r2, -np.inf)


def oracle_rate_region(
    inst2: NetworkInstance,
    sweep_points: int = 25,
    scheme: str = "RSMA",
    cfg: Optional[OracleConfig] = None,
    axis_points: int = 201,
) -> np.ndarray:
    """Rate-region boundary by brute force, as rows ``(r1_target, r2_max)``.

    ``r1`` belongs to the weak user (index 0).  Demands in
    ``inst2.r_min`` are ignored: the region is the set of achievable pairs.
    For RSMA the SIC gap on the common message is always enforced; for NOMA
    it applies whenever the strong user's layer carries power.  Targets are
    spread evenly over ``[0, B log2(1 + h_1 P / sigma^2)]``.  RSMA grids the
    two private powers, NOMA the strong user's power, each on an axis of
    ``axis_points`` linear plus as many log-spaced values, followed by
    ``cfg.refine_rounds`` shrinking local passes.
    """
    if inst2.num_users != 2:
        raise ValueError("rate region needs exactly two users")
    if scheme not in ("RSMA", "NOMA"):
        raise ValueError(f"unknown scheme {scheme!r}")
    cfg = cfg or OracleConfig()
    big_p = inst2.p_max
    dims = 2 if scheme == "RSMA" else 1
    axis = _region_axis(big_p, axis_points)
    pts = _box_grid_axes([axis] * dims)
    pts = pts[pts.sum(axis=1) <= big_p + cfg.eps_power]
    r1_max = inst2.bandwidth * np.log2(1.0 + inst2.h[0] * big_p / inst2.sigma2)
    targets = np.linspace(0.0, r1_max, sweep_points)

    best = np.full(targets.size, -np.inf)
    for i, t in enumerate(targets):
        vals = _region_values(inst2, scheme, pts, t, cfg.eps_power)
        j = int(np.argmax(vals))
        center, center_val = pts[j], vals[j]
        if not np.isfinite(center_val):
            continue
        half = np.array([_axis_half(axis, x) for x in center])
        for _ in range(cfg.refine_rounds):
            box = _box_grid(
                np.clip(center - half, 0.0, big_p),
                np.clip(center + half, 0.0, big_p),
                cfg.refine_points,
            )
            v = _region_values(inst2, scheme, box, t, cfg.eps_power)
            jj = int(np.argmax(v))
            if v[jj] > center_val:
                center, center_val = box[jj], v[jj]
            half = half * cfg.shrink
        best[i] = center_val
    # A point feasible for a larger target is feasible for every smaller one.
    best = np.maximum.accumulate(best[::-1])[::-1]
    keep = np.isfinite(best)
    return np.column_stack([targets[keep], best[keep]])


def dominance_slack(
    trace: SearchTrace, factor: float = 2.0, rtol: float = 1e-9, window: int = 2
) -> float:
    """Allowed shortfall of the grid-searched sum-rate against the oracle.

    ``factor`` times the common-power step times the steepest objective
    slope among the grid intervals within ``window`` steps of the best
    point, plus a relative floor.
    """
    grid = trace.p0_grid
    obj = trace.objective_at_p0
    best = trace.best_index
    floor = rtol * abs(float(obj[best]))
    if grid.size < 2:
        return floor
    lo = max(best - window, 0)
    hi = min(best + window, grid.size - 1)
    g = grid[lo : hi + 1]
    o = obj[lo : hi + 1]
    step = np.diff(g)
    both = np.isfinite(o[1:]) & np.isfinite(o[:-1])
    if not np.any(both):
        return floor
    slope = np.abs(o[1:][both] - o[:-1][both]) / step[both]
    return factor * float(step.max()) * float(slope.max()) + floor


def check_solution(inst: NetworkInstance, sol: RsmaSolution, eps_rate: float = 1e-6, eps_power: float = 1e-12):
    """Names of the solution invariants that fail (empty list when all hold)."""
    bad = []
    p = sol.powers
    scale = max(1.0, inst.p_max)
    if abs(p.total - inst.p_max) > eps_power * scale:
        bad.append("budget_tight")
    if p.p0 - p.p_priv.sum() < (inst.theta + inst.sigma2) / inst.h[0] - eps_power * scale:
        bad.append("sic_margin")
    if np.any(sol.user_total_rates < inst.r_min - eps_rate):
        bad.append("demand")
    if abs(sol.rates.sum() - sol.common_rate_c1) > eps_rate:
        bad.append("common_rate_tight")
    if abs(sol.sum_rate - sol.user_total_rates.sum()) > 1e-9 * abs(sol.sum_rate):
        bad.append("sum_rate")
    capped = np.minimum(sol.rates, inst.r_min)
    floor = p_min_vector(inst, capped, p.p0)
    above = p.p_priv - floor > eps_power * scale
    if above.sum() > 1:
        bad.append("single_distinguished_user")
    if np.any(p.p_priv < -eps_power) or p.p0 < 0 or np.any(sol.rates < -eps_rate):
        bad.append("nonnegative")
    return bad
