"""Globally optimal rate splitting and power control for downlink RSMA.

The solver scans the common-message power on a grid; at every grid point
the common-rate split comes from exact corner enumeration and the private
powers from a closed form.  NOMA, OFDMA and broadcast baselines, a
brute-force oracle and a Monte-Carlo harness sit alongside.
"""

from .baselines import (
    BaselineSolution,
    noma_rates,
    noma_region_boundary,
    ofdma_rates,
    solve_broadcast,
    solve_noma,
    solve_ofdma,
)
from .channel import (
    STANDARD_SETUP,
    ChannelParams,
    dbm_to_watt,
    drop_users,
    pathloss_gain,
    random_instance,
    trial_seed,
    watt_to_dbm,
)
from .model import (
    EmptyP0Range,
    Infeasible,
    NetworkInstance,
    PowerAllocation,
    PowerBudgetInfeasible,
    RateCapViolation,
    RsmaError,
    RsmaSolution,
    SolverParams,
    common_rate,
    private_rate,
    private_rates,
    sic_feasible,
)
from .oracle import OracleConfig, check_solution, oracle_rate_region, oracle_solve
from .private_power import feasible_rate_power, optimal_private_power, p_min, select_k_star
from .rate_alloc import (
    CornerCandidate,
    enumerate_candidates,
    optimal_rate_equal_demand,
    rate_objective,
    solve_case3_root,
)
from .search import SearchTrace, p0_bounds, solve_rsma, solve_rsma_auto, solve_two_user_fast

__version__ = "0.1.0"
