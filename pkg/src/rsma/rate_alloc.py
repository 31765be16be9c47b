"""Optimal split of the common rate among users for a fixed common power.

For fixed ``p0`` the private sum-rate ``f(a)`` (private powers already
optimised) is convex in the shares ``a``, so its maximum over the feasible
shares sits at a corner point.  Three families of corners are enumerated:

* ``case1``: every share at a bound, ``a_j in {0, R_j}``;
* ``case2``: one pinned user ``l`` whose share closes either the
  common-rate budget (``b1``) or the private power budget (``b2``), the rest
  at bounds;
* ``case3``: a pair ``(m, n)`` with both budgets tight; ``a_n`` solves a
  scalar equation with at most two roots, ``a_m`` closes the rate budget.

Every routine here is vectorised over a batch of common powers: ``p0`` and
``c1`` are arrays of shape ``(N,)`` and candidates come back as ``(N, T, K)``.
The scalar functions at the bottom wrap that core for single evaluations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .model import NetworkInstance, PowerBudgetInfeasible, SolverParams, as_vector
from .private_power import LN2, _deficit_factor, _k_star_batch, p_min_vector

__all__ = [
    "CornerCandidate",
    "common_term",
    "fixed_k_objective",
    "rate_objective",
    "total_objective",
    "enumerate_candidates",
    "solve_case3_root",
    "optimal_rate_equal_demand",
    "best_rate_split",
    "raw_candidate_count",
]

CASE1, CASE2, CASE3 = "case1", "case2", "case3"
MAX_BISECTION_ITERS = 200
OBJ_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class CornerCandidate:
    a: np.ndarray
    case_tag: str
    binding: Tuple[str, ...]
    objective: float
    k_star: int


@dataclass(frozen=True)
class _Template:
    case: str
    pattern: Tuple[int, ...]  # 1 -> a_j = R_j, 0 -> a_j = 0, -1 -> free
    free: Tuple[int, ...]
    variant: str
    binding: Tuple[str, ...]


@lru_cache(maxsize=None)
def _templates(k: int) -> Tuple[_Template, ...]:
    out = []
    for bits in itertools.product((0, 1), repeat=k):
        out.append(_Template(CASE1, bits, (), "", ("bounds",)))
    for l in range(k):
        for bits in itertools.product((0, 1), repeat=k - 1):
            pat = list(bits)
            pat.insert(l, -1)
            out.append(_Template(CASE2, tuple(pat), (l,), "b1", ("common_rate",)))
            out.append(_Template(CASE2, tuple(pat), (l,), "b2", ("power_budget",)))
    for m, n in itertools.combinations(range(k), 2):
        rest = [j for j in range(k) if j not in (m, n)]
        for bits in itertools.product((0, 1), repeat=k - 2):
            pat = [-1] * k
            for j, b in zip(rest, bits):
                pat[j] = b
            for flank in ("left", "right"):
                out.append(
                    _Template(CASE3, tuple(pat), (m, n), flank, ("common_rate", "power_budget"))
                )
    return tuple(out)


def raw_candidate_count(k: int) -> int:
    """Number of corner candidates generated per common power before screening."""
    return len(_templates(k))


# -- objective pieces -------------------------------------------------------

def common_term(inst: NetworkInstance, p0):
    """Common rate with the whole budget in use: ``B log2((h1 P + s2)/(h1 (P-p0) + s2))``."""
    h1 = inst.h[0]
    p0 = np.asarray(p0, dtype=float)
    val = inst.bandwidth * np.log2(
        (h1 * inst.p_max + inst.sigma2) / (h1 * (inst.p_max - p0) + inst.sigma2)
    )
    return float(val) if val.ndim == 0 else val


def _objective_batch(inst: NetworkInstance, a: np.ndarray, p0, k=None):
    """Private objective for shares ``a`` of shape ``(..., K)``.

    ``k`` defaults to the distinguished user of each row.  Returns
    ``(objective, k)``.
    """
    if k is None:
        k = _k_star_batch(inst, a, p0)
    k = np.asarray(k)
    pm = p_min_vector(inst, a, p0)
    w_k = inst.p_max - np.asarray(p0, dtype=float) + inst.noise_over_gain[k]
    pm_k = np.take_along_axis(pm, k[..., None], axis=-1)[..., 0]
    a_k = np.take_along_axis(a, k[..., None], axis=-1)[..., 0]
    denom = np.sum(pm, axis=-1) - pm_k + inst.noise_over_gain[k]
    gap = np.sum(inst.r_min - a, axis=-1) - (inst.r_min[k] - a_k)
    return inst.bandwidth * np.log2(w_k / denom) + gap, k


def fixed_k_objective(inst: NetworkInstance, a, p0: float, k: int) -> float:
    """Private objective with the distinguished user forced to ``k``; unchecked."""
    a = as_vector(a, inst.num_users)
    val, _ = _objective_batch(inst, a, p0, k=np.int64(k))
    return float(val)


def rate_objective(inst: NetworkInstance, a, p0: float, eps_power: float = 1e-12) -> float:
    """Optimal private sum-rate for shares ``a`` at common power ``p0``.

    This is the part of the sum-rate that depends on ``a``; add
    :func:`common_term` for the full objective.  Raises
    :class:`PowerBudgetInfeasible` if the minimum powers do not fit.
    """
    a = as_vector(a, inst.num_users)
    budget = inst.p_max - p0
    need = float(np.sum(p_min_vector(inst, a, p0)))
    if need > budget + eps_power:
        raise PowerBudgetInfeasible(
            f"minimum private powers {need:.6g} W exceed budget {budget:.6g} W",
            constraint="private_power_budget", need=need, budget=budget,
        )
    val, _ = _objective_batch(inst, a, p0)
    return float(val)


def total_objective(inst: NetworkInstance, a, p0: float, eps_power: float = 1e-12) -> float:
    return common_term(inst, p0) + rate_objective(inst, a, p0, eps_power)


# -- scalar root problem ----------------------------------------------------

def _case3_lhs(x, s, rest_pm, w_m, w_n, r_m, r_n, bw):
    return (
        w_m * _deficit_factor(s - x, r_m, bw)
        + w_n * _deficit_factor(x, r_n, bw)
        + rest_pm
    )


def _case3_slope(x, s, w_m, w_n, r_m, r_n, bw):
    return (LN2 / bw) * (
        w_m * np.exp2((s - x - r_m) / bw) - w_n * np.exp2((x - r_n) / bw)
    )


def _bisect_vec(f, lo, hi, keep_low, tol, active):
    """Vectorised bisection of a monotone flank.

    ``keep_low`` tells, per element, whether the feasible side (``f <= 0``)
    is the low end.  Returns the feasible endpoint of the final bracket.
    """
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(MAX_BISECTION_ITERS):
        feas_end = np.where(keep_low, lo, hi)
        done = ~active | (np.abs(f(feas_end)) <= tol) | (hi - lo <= 4 * np.spacing(np.maximum(np.abs(hi), 1.0)))
        if np.all(done):
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        # feasible side moves toward the root
        go_low = np.where(keep_low, fm <= 0, fm > 0)
        lo = np.where(~done & go_low, mid, lo)
        hi = np.where(~done & ~go_low, mid, hi)
    return np.where(keep_low, lo, hi)


def _case3_roots(inst: NetworkInstance, s, lo, hi, rest_pm, budget, m, n, root_tol):
    """Both-flank roots of the case-3 equation, vectorised over the batch.

    Returns ``(left, right)`` arrays with NaN where a flank has no root.
    """
    bw = inst.bandwidth
    nog = inst.noise_over_gain
    w_m = budget + nog[m]
    w_n = budget + nog[n]
    r_m, r_n = inst.r_min[m], inst.r_min[n]
    tol = root_tol * budget
    valid = lo <= hi
    lo = np.where(valid, lo, 0.0)
    hi = np.where(valid, hi, 0.0)

    def phi(x):
        return _case3_lhs(x, s, rest_pm, w_m, w_n, r_m, r_n, bw) - budget

    def slope(x):
        return _case3_slope(x, s, w_m, w_n, r_m, r_n, bw)

    # The left side is concave along the segment: locate its peak.
    g_lo, g_hi = slope(lo), slope(hi)
    peak = np.where(g_lo <= 0, lo, np.where(g_hi >= 0, hi, np.nan))
    interior = valid & np.isnan(peak)
    if np.any(interior):
        a_lo, a_hi = lo.copy(), hi.copy()
        for _ in range(MAX_BISECTION_ITERS):
            if np.all(a_hi - a_lo <= 4 * np.spacing(np.maximum(np.abs(a_hi), 1.0))):
                break
            mid = 0.5 * (a_lo + a_hi)
            up = slope(mid) > 0
            a_lo = np.where(interior & up, mid, a_lo)
            a_hi = np.where(interior & ~up, mid, a_hi)
        peak = np.where(interior, 0.5 * (a_lo + a_hi), peak)
    peak = np.where(valid, peak, 0.0)

    f_peak = phi(peak)
    tangent = valid & (np.abs(f_peak) <= tol)
    crosses = valid & (f_peak > tol)
    left_has = crosses & (phi(lo) <= 0)
    right_has = crosses & (phi(hi) <= 0)

    left = _bisect_vec(phi, lo, peak, np.ones_like(valid), tol, left_has)
    right = _bisect_vec(phi, peak, hi, np.zeros_like(valid), tol, right_has)
    left = np.where(left_has, left, np.where(tangent, peak, np.nan))
    right = np.where(right_has, right, np.nan)
    return left, right


def solve_case3_root(
    inst: NetworkInstance,
    p0: float,
    fixed: Sequence[float],
    m: int,
    n: int,
    c1: float,
    root_tol: float = 1e-10,
) -> List[float]:
    """Values of ``a_n`` in ``[0, R_n]`` that make both budgets tight.

    ``fixed`` supplies the shares of every user other than ``m`` and ``n``
    (those two entries are ignored); ``a_m`` is ``c1`` minus all other
    shares.  Returns zero, one or two roots in ascending order.
    """
    fixed = as_vector(fixed, inst.num_users, "fixed").copy()
    fixed[[m, n]] = 0.0
    r = inst.r_min
    s = np.array([c1 - fixed.sum()])
    budget = np.array([inst.p_max - p0])
    lo = np.maximum(0.0, s - r[m])
    hi = np.minimum(r[n], s)
    pm = p_min_vector(inst, fixed, p0)
    rest_pm = np.array([pm.sum() - pm[m] - pm[n]])
    left, right = _case3_roots(inst, s, lo, hi, rest_pm, budget, m, n, root_tol)
    roots = [float(x) for x in (left[0], right[0]) if np.isfinite(x)]
    if len(roots) == 2 and abs(roots[1] - roots[0]) <= 4 * np.spacing(max(abs(roots[1]), 1.0)):
        roots = roots[:1]
    return roots


# -- candidate tables -------------------------------------------------------

def _nudge_feasible(inst, A, p0, budget, col, rows):
    """Push ``A[rows, col]`` up by ulps until the power budget closes."""
    for _ in range(8):
        need = np.sum(p_min_vector(inst, A, p0), axis=-1)
        bad = rows & (need > budget) & (A[:, col] < inst.r_min[col])
        if not np.any(bad):
            break
        A[bad, col] = np.minimum(np.nextafter(A[bad, col], np.inf), inst.r_min[col])
    return A


def _candidate_table(inst: NetworkInstance, p0, c1, params: SolverParams):
    """All corner candidates for a batch of common powers.

    Returns ``(A, templates)`` with ``A`` of shape ``(N, T, K)``; entries of
    candidates that do not exist (no root) are NaN.
    """
    p0 = np.asarray(p0, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    k = inst.num_users
    r = inst.r_min
    bw = inst.bandwidth
    nog = inst.noise_over_gain
    budget = inst.p_max - p0
    temps = _templates(k)
    n_rows = p0.size
    A = np.full((n_rows, len(temps), k), np.nan)

    for t, tpl in enumerate(temps):
        pat = np.array(tpl.pattern)
        base = np.where(pat == 1, r, 0.0)
        row = np.broadcast_to(base, (n_rows, k)).copy()
        if tpl.case == CASE1:
            A[:, t] = row
            continue
        if tpl.case == CASE2:
            (l,) = tpl.free
            others = np.arange(k) != l
            if tpl.variant == "b1":
                val = c1 - base[others].sum()
            else:
                pm = p_min_vector(inst, base, p0)
                pm_others = np.sum(pm[:, others], axis=-1)
                val = r[l] + bw * np.log2((nog[l] + pm_others) / (budget + nog[l]))
            row[:, l] = np.clip(val, 0.0, r[l])
            if tpl.variant == "b2":
                row = _nudge_feasible(inst, row, p0, budget, l, np.ones(n_rows, bool))
            A[:, t] = row
            continue
        m, n = tpl.free
        rest = (pat != -1)
        s = c1 - base[rest].sum()
        lo = np.maximum(0.0, s - r[m])
        hi = np.minimum(r[n], s)
        pm = p_min_vector(inst, base, p0)
        rest_pm = np.sum(pm[:, rest], axis=-1) if rest.any() else np.zeros(n_rows)
        left, right = _case3_roots(inst, s, lo, hi, rest_pm, budget, m, n, params.root_tol)
        an = left if tpl.variant == "left" else right
        row[:, n] = an
        row[:, m] = np.clip(s - an, 0.0, r[m])
        A[:, t] = row
    return A, temps


def _screen(inst, A, p0, c1, params: SolverParams):
    p0 = np.asarray(p0, dtype=float)
    budget = (inst.p_max - p0)[:, None]
    need = np.sum(p_min_vector(inst, A, p0[:, None]), axis=-1)
    ok = np.all(np.isfinite(A), axis=-1)
    with np.errstate(invalid="ignore"):
        ok &= np.all(A >= -params.eps_rate, axis=-1)
        ok &= np.all(A <= inst.r_min + params.eps_rate, axis=-1)
        ok &= np.sum(A, axis=-1) <= np.asarray(c1)[:, None] + params.eps_rate
        ok &= need <= budget + params.eps_power
    return ok


def _lexmin_rows(A, mask):
    """Index per row of the lexicographically smallest masked candidate."""
    keep = mask.copy()
    for j in range(A.shape[-1]):
        col = np.where(keep, A[..., j], np.inf)
        keep &= col <= np.min(col, axis=-1, keepdims=True)
    return np.argmax(keep, axis=-1)


def _best_of_table(inst, A, ok, p0):
    """Best screened candidate per row: max objective, then lexicographically smallest a."""
    safe = np.where(ok[..., None], A, 0.0)
    obj, kk = _objective_batch(inst, safe, np.asarray(p0)[:, None])
    obj = np.where(ok, obj, -np.inf)
    best = np.max(obj, axis=-1)
    near = ok & (obj >= best[:, None] - OBJ_TIE_RTOL * np.abs(best[:, None]))
    idx = _lexmin_rows(A, near)
    rows = np.arange(A.shape[0])
    return best, A[rows, idx], kk[rows, idx], idx


def greedy_fill(c1, r_common: float, k: int) -> np.ndarray:
    """Fill shares of size ``r_common`` from user 0 upward until ``c1`` is used."""
    c1 = np.atleast_1d(np.asarray(c1, dtype=float))
    out = np.zeros((c1.size, k))
    if r_common <= 0:
        return out
    total = np.clip(c1, 0.0, k * r_common)
    for j in range(k):
        out[:, j] = np.clip(total - j * r_common, 0.0, r_common)
    return out


def split_batch(inst: NetworkInstance, p0, c1, params: SolverParams, method: str = "enumerate"):
    """Optimal split at every common power of a batch.

    ``method`` is ``"enumerate"`` (all corners) or ``"equal"`` (greedy fill,
    valid for equal demands).  Returns ``(objective, A, k_star, evaluations)``
    where rows with no feasible split have objective ``-inf``.
    """
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    c1 = np.atleast_1d(np.asarray(c1, dtype=float))
    if method == "equal":
        A = greedy_fill(c1, float(inst.r_min[0]), inst.num_users)[:, None, :]
        A = np.minimum(A, inst.r_min)
    elif method == "enumerate":
        A, _ = _candidate_table(inst, p0, c1, params)
    else:
        raise ValueError(f"unknown split method {method!r}")
    ok = _screen(inst, A, p0, c1, params)
    best, a_best, k_best, _ = _best_of_table(inst, A, ok, p0)
    return best, a_best, k_best, A.shape[0] * A.shape[1]


# -- scalar API -------------------------------------------------------------

def enumerate_candidates(
    inst: NetworkInstance,
    p0: float,
    c1: float,
    params: Optional[SolverParams] = None,
) -> List[CornerCandidate]:
    """Every screened corner candidate at common power ``p0``."""
    params = params or SolverParams()
    p0a = np.array([float(p0)])
    c1a = np.array([float(c1)])
    A, temps = _candidate_table(inst, p0a, c1a, params)
    ok = _screen(inst, A, p0a, c1a, params)[0]
    out = []
    for t in np.flatnonzero(ok):
        a = np.clip(A[0, t], 0.0, inst.r_min)
        obj, kk = _objective_batch(inst, a, float(p0))
        out.append(CornerCandidate(a, temps[t].case, temps[t].binding, float(obj), int(kk)))
    return out


def optimal_rate_equal_demand(
    inst: NetworkInstance, c1: float, r_common: Optional[float] = None, tol: float = 1e-6
) -> np.ndarray:
    """Optimal shares when every user demands the same rate.

    Users are filled in ascending-gain order with full shares ``R`` and one
    partial share, so ``sum(a) == min(c1, K R)``.
    """
    if not inst.equal_demand(tol):
        raise ValueError("demands differ; use enumerate_candidates")
    r_common = float(inst.r_min[0]) if r_common is None else float(r_common)
    return greedy_fill(c1, r_common, inst.num_users)[0]


def best_rate_split(
    inst: NetworkInstance,
    p0: float,
    c1: float,
    params: Optional[SolverParams] = None,
    method: Optional[str] = None,
) -> CornerCandidate:
    """Best corner at ``p0``; raises PowerBudgetInfeasible when none is feasible."""
    params = params or SolverParams()
    if method is None:
        method = "equal" if inst.equal_demand(params.eps_rate) else "enumerate"
    obj, A, kk, _ = split_batch(inst, [p0], [c1], params, method)
    if not np.isfinite(obj[0]):
        raise PowerBudgetInfeasible(
            f"no feasible rate split at p0={p0:.6g} W", constraint="private_power_budget", p0=p0
        )
    tag = "equal_demand" if method == "equal" else "best_corner"
    return CornerCandidate(np.clip(A[0], 0.0, inst.r_min), tag, (), float(obj[0]), int(kk[0]))
