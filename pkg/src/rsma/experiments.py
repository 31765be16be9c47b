"""Monte-Carlo sweeps, empirical CDFs, rate regions and solver verification.

Everything here returns plain rows; :mod:`rsma.cli` turns them into CSV.

Trials are paired: trial ``t`` of an experiment with base seed ``s`` drops
its users with ``trial_seed(s, t)`` whatever the scheme or sweep value, so
every scheme sees the same channels.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .baselines import solve_broadcast, solve_noma, solve_ofdma
from .channel import STANDARD_SETUP, ChannelParams, random_instance, trial_seed
from .model import Infeasible, NetworkInstance, SolverParams
from .oracle import OracleConfig, check_solution, dominance_slack, oracle_rate_region, oracle_solve
from .search import solve_rsma, solve_rsma_auto

__all__ = [
    "SCHEME_NAMES",
    "SWEEP_VARS",
    "ExperimentSpec",
    "SweepRow",
    "solve_scheme",
    "run_sweep",
    "summarize",
    "paired_trials",
    "sweep_means",
    "cdf_rows",
    "region_rows",
    "VerifyReport",
    "run_verify",
    "write_csv",
    "fmt",
    "SWEEP_COLUMNS",
    "SUMMARY_COLUMNS",
    "CDF_COLUMNS",
    "REGION_COLUMNS",
]

SCHEME_NAMES = ("RSMA", "NOMA", "OFDMA", "Broadcast")
SWEEP_VARS = ("p_max_dbm", "r_min", "theta_dbm", "num_users", "none")
MIN_CDF_TRIALS = 100

SWEEP_COLUMNS = (
    "sweep_var", "sweep_value", "trial", "seed", "scheme", "sum_rate_bps", "feasible", "solve_ms",
)
SUMMARY_COLUMNS = (
    "sweep_var", "sweep_value", "scheme", "n_trials", "n_feasible", "mean_bps", "std_bps",
    "n_paired", "paired_mean_bps", "paired_std_bps",
)
CDF_COLUMNS = ("scheme", "rank", "sum_rate_bps", "quantile")
REGION_COLUMNS = ("scheme", "r1_target_bps", "r2_max_bps")


def fmt(x) -> str:
    """CSV cell: ints verbatim, floats in round-trip scientific notation."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else f"{float(x):.16e}"
    return str(x)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


@dataclass(frozen=True)
class ExperimentSpec:
    """A declarative Monte-Carlo experiment.

    ``r_min`` is a scalar or one demand per user.  A sweep over ``r_min``
    changes the demand of user ``sweep_user`` only; a sweep over
    ``num_users`` needs a scalar demand.  ``xi_rel`` is the common-power
    search step as a fraction of ``P`` (``None`` keeps the solver default).
    """

    schemes: Tuple[str, ...] = ("RSMA", "NOMA", "OFDMA")
    sweep_var: str = "none"
    sweep_values: Tuple[float, ...] = ()
    sweep_user: int = 0
    trials: int = 100
    seed: int = 0
    num_users: int = 3
    channel: ChannelParams = field(default_factory=ChannelParams)
    bandwidth: float = STANDARD_SETUP["bandwidth"]
    sigma2_dbm: float = STANDARD_SETUP["sigma2_dbm"]
    p_max_dbm: float = STANDARD_SETUP["p_max_dbm"]
    theta_dbm: float = STANDARD_SETUP["theta_dbm"]
    r_min: Tuple[float, ...] = (STANDARD_SETUP["r_min"],)
    xi_rel: Optional[float] = None
    eps_rate: float = 1e-6
    eps_power: float = 1e-12
    workers: int = 1

    def __post_init__(self):
        bad = [s for s in self.schemes if s not in SCHEME_NAMES]
        if bad or not self.schemes:
            raise ValueError(f"unknown schemes {bad}; choose from {SCHEME_NAMES}")
        if self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"sweep_var must be one of {SWEEP_VARS}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.sweep_var != "none" and not self.sweep_values:
            raise ValueError("sweep grid is empty")
        if self.sweep_var == "num_users":
            if len(self.r_min) != 1:
                raise ValueError("a num_users sweep needs a scalar r_min")
            if any(int(v) != v or v < 1 for v in self.sweep_values):
                raise ValueError("num_users values must be positive integers")
        elif len(self.r_min) not in (1, self.num_users):
            raise ValueError(f"r_min needs 1 or {self.num_users} values")
        if self.sweep_var == "r_min" and not 0 <= self.sweep_user < self.num_users:
            raise ValueError("sweep_user out of range")
        if self.xi_rel is not None and self.xi_rel <= 0:
            raise ValueError("xi_rel must be positive")

    @property
    def grid(self) -> Tuple[float, ...]:
        return tuple(self.sweep_values) if self.sweep_var != "none" else (float("nan"),)

    def instance(self, value: float, trial: int) -> NetworkInstance:
        k = int(value) if self.sweep_var == "num_users" else self.num_users
        r = np.broadcast_to(np.asarray(self.r_min, dtype=float), (k,)).copy()
        kw = dict(
            bandwidth=self.bandwidth, sigma2_dbm=self.sigma2_dbm,
            p_max_dbm=self.p_max_dbm, theta_dbm=self.theta_dbm,
        )
        if self.sweep_var == "r_min":
            r[self.sweep_user] = value
        elif self.sweep_var in ("p_max_dbm", "theta_dbm"):
            kw[self.sweep_var] = value
        return random_instance(k, trial_seed(self.seed, trial), self.channel, r_min=r, **kw)

    def solver_params(self, inst: NetworkInstance) -> SolverParams:
        xi = None if self.xi_rel is None else self.xi_rel * inst.p_max
        return SolverParams(xi=xi, eps_rate=self.eps_rate, eps_power=self.eps_power)


@dataclass(frozen=True)
class SweepRow:
    sweep_var: str
    sweep_value: float
    trial: int
    seed: int
    scheme: str
    sum_rate_bps: float
    feasible: bool
    solve_ms: float

    def cells(self):
        return (
            self.sweep_var, self.sweep_value, self.trial, self.seed, self.scheme,
            self.sum_rate_bps, self.feasible, self.solve_ms,
        )


def solve_scheme(inst: NetworkInstance, scheme: str, params: Optional[SolverParams] = None) -> float:
    """Sum-rate of ``scheme`` on ``inst``; raises :class:`Infeasible`."""
    if scheme == "RSMA":
        return solve_rsma_auto(inst, params)[0].sum_rate
    solver = {"NOMA": solve_noma, "OFDMA": solve_ofdma, "Broadcast": solve_broadcast}[scheme]
    return solver(inst).sum_rate


def _trial_rows(spec: ExperimentSpec, value: float, trial: int) -> List[SweepRow]:
    inst = spec.instance(value, trial)
    params = spec.solver_params(inst)
    seed = trial_seed(spec.seed, trial)
    rows = []
    for scheme in spec.schemes:
        t0 = time.perf_counter()
        try:
            rate, ok = solve_scheme(inst, scheme, params), True
        except Infeasible:
            rate, ok = float("nan"), False
        ms = (time.perf_counter() - t0) * 1e3
        rows.append(SweepRow(spec.sweep_var, float(value), trial, seed, scheme, rate, ok, ms))
    return rows


def _job(args):
    return _trial_rows(*args)


def run_sweep(spec: ExperimentSpec) -> List[SweepRow]:
    """One row per (sweep value, trial, scheme), in that order."""
    jobs = [(spec, v, t) for v in spec.grid for t in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_job, jobs, chunksize=8))
    else:
        chunks = [_job(j) for j in jobs]
    rows = [r for chunk in chunks for r in chunk]
    order = {s: i for i, s in enumerate(spec.schemes)}
    where = {v: i for i, v in enumerate(spec.grid)}
    # NaN keys (no sweep) compare unequal to themselves, hence the fallback.
    rows.sort(key=lambda r: (where.get(r.sweep_value, 0), r.trial, order[r.scheme]))
    return rows


def _rate_table(rows: Sequence[SweepRow], schemes, grid, trials) -> np.ndarray:
    """``(values, trials, schemes)`` array of sum-rates, NaN where infeasible."""
    out = np.full((len(grid), trials, len(schemes)), np.nan)
    col = {s: i for i, s in enumerate(schemes)}
    where = {v: i for i, v in enumerate(grid)}
    for r in rows:
        v = where.get(r.sweep_value, 0)
        out[v, r.trial, col[r.scheme]] = r.sum_rate_bps if r.feasible else np.nan
    return out


def paired_trials(table: np.ndarray) -> np.ndarray:
    """Mask of trials feasible for every scheme at every sweep value."""
    return np.all(np.isfinite(table), axis=(0, 2))


def _stats(x: np.ndarray) -> Tuple[float, float]:
    if x.size == 0:
        return float("nan"), float("nan")
    std = float(np.std(x, ddof=1)) if x.size > 1 else float("nan")
    return float(np.mean(x)), std


def summarize(rows: Sequence[SweepRow], spec: ExperimentSpec) -> List[tuple]:
    """Per (sweep value, scheme): counts, mean/std over feasible trials and
    over the paired subset (trials feasible everywhere)."""
    table = _rate_table(rows, spec.schemes, spec.grid, spec.trials)
    paired = paired_trials(table)
    out = []
    for v, value in enumerate(spec.grid):
        for s, scheme in enumerate(spec.schemes):
            col = table[v, :, s]
            mean, std = _stats(col[np.isfinite(col)])
            pmean, pstd = _stats(col[paired])
            out.append((
                spec.sweep_var, float(value), scheme, spec.trials, int(np.isfinite(col).sum()),
                mean, std, int(paired.sum()), pmean, pstd,
            ))
    return out


def sweep_means(rows: Sequence[SweepRow], spec: ExperimentSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Paired means ``(values, schemes)`` and the per-trial table."""
    table = _rate_table(rows, spec.schemes, spec.grid, spec.trials)
    paired = paired_trials(table)
    return table[:, paired, :].mean(axis=1), table


def cdf_rows(spec: ExperimentSpec, rows: Optional[Sequence[SweepRow]] = None) -> List[tuple]:
    """Empirical CDF per scheme over the paired feasible trials."""
    if spec.trials < MIN_CDF_TRIALS:
        raise ValueError(f"a CDF needs at least {MIN_CDF_TRIALS} trials, got {spec.trials}")
    if spec.sweep_var != "none":
        spec = replace(spec, sweep_var="none", sweep_values=())
    rows = run_sweep(spec) if rows is None else rows
    table = _rate_table(rows, spec.schemes, spec.grid, spec.trials)[0]
    paired = np.all(np.isfinite(table), axis=1)
    out = []
    for s, scheme in enumerate(spec.schemes):
        vals = np.sort(table[paired, s])
        n = vals.size
        out.extend((scheme, i + 1, float(x), (i + 1) / n) for i, x in enumerate(vals))
    return out


def region_rows(
    inst2: NetworkInstance, sweep_points: int = 25, cfg: Optional[OracleConfig] = None
) -> List[tuple]:
    """Two-user rate-region boundaries for RSMA and NOMA on a shared target grid."""
    out = []
    for scheme in ("RSMA", "NOMA"):
        pts = oracle_rate_region(inst2, sweep_points, scheme, cfg)
        out.extend((scheme, float(t), float(r2)) for t, r2 in pts)
    return out


@dataclass
class VerifyReport:
    count: int
    seed: int
    num_users: int
    failures: List[Tuple[int, str]]
    worst_gap: float
    elapsed_s: float

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> List[str]:
        head = (
            f"verify K={self.num_users} count={self.count} seed={self.seed}: "
            f"{'PASS' if self.passed else 'FAIL'} "
            f"(worst relative gap to oracle {self.worst_gap:.3e}, {self.elapsed_s:.1f} s)"
        )
        return [head] + [f"  seed {s}: {why}" for s, why in self.failures]


def run_verify(
    count: int,
    seed: int = 0,
    num_users: int = 2,
    make_instance: Optional[Callable[[int, int], NetworkInstance]] = None,
    solver: Callable = solve_rsma,
    params: Optional[SolverParams] = None,
    oracle_cfg: Optional[OracleConfig] = None,
) -> VerifyReport:
    """Solve instances ``seed, seed+1, ...`` and certify each against the oracle.

    ``solver`` must return ``(solution, trace)`` like :func:`solve_rsma`.
    """
    make_instance = make_instance or (lambda k, s: random_instance(k, s))
    params = params or SolverParams()
    failures: List[Tuple[int, str]] = []
    worst = 0.0
    t0 = time.perf_counter()
    for i in range(count):
        s = seed + i
        inst = make_instance(num_users, s)
        try:
            sol, trace = solver(inst, params)
        except Infeasible as exc:
            try:
                oracle_solve(inst, oracle_cfg)
            except Infeasible:
                continue
            failures.append((s, f"solver reports infeasible ({exc.constraint}) but the oracle found a point"))
            continue
        bad = check_solution(inst, sol, params.eps_rate, params.eps_power)
        if bad:
            failures.append((s, "invariants failed: " + ", ".join(bad)))
        try:
            ref = oracle_solve(inst, oracle_cfg)
        except Infeasible:
            failures.append((s, "oracle finds no feasible point"))
            continue
        slack = dominance_slack(trace)
        gap = ref.objective - sol.sum_rate
        worst = max(worst, gap / abs(sol.sum_rate))
        if gap > slack:
            failures.append((s, f"oracle beats solver by {gap:.6g} bit/s (slack {slack:.6g})"))
    return VerifyReport(count, seed, num_users, failures, worst, time.perf_counter() - t0)

