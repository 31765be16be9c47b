import numpy as np
import pytest

from helpers import table_instance, unit_instance
from rsma import (
    EmptyP0Range,
    Infeasible,
    PowerBudgetInfeasible,
    SolverParams,
    check_solution,
    p0_bounds,
    random_instance,
    solve_rsma,
    solve_rsma_auto,
    solve_two_user_fast,
)
from rsma.rate_alloc import common_term, raw_candidate_count, split_batch
from rsma.search import default_xi, p0_grid


def test_p0_bounds_example():
    # (theta + sigma^2) / h_1 = 0.04 W with P = 1 W
    inst = unit_instance([25.0, 100.0], 0.5, p_max=1.0)
    lo, hi = p0_bounds(inst)
    assert lo == pytest.approx(0.52, rel=1e-15)
    assert hi == 1.0


def test_empty_p0_range_raises():
    inst = unit_instance([0.5, 100.0], 0.1, p_max=1.0)
    lo, hi = p0_bounds(inst)
    assert lo > hi
    with pytest.raises(EmptyP0Range) as err:
        solve_rsma(inst)
    assert err.value.constraint == "sic"
    with pytest.raises(EmptyP0Range):
        solve_two_user_fast(inst)


def test_grid_layout():
    inst = table_instance([3e-11, 4e-10])
    g = p0_grid(inst)
    lo, hi = p0_bounds(inst)
    assert g[0] == lo and g[-1] == hi
    assert np.all(np.diff(g) > 0)
    assert g.size == 2001
    assert default_xi(inst) == pytest.approx((hi - lo) / 2000)
    coarse = p0_grid(inst, xi=0.3)
    assert coarse[-1] == hi and np.all(coarse[:-1] < hi)


def test_two_user_common_power_example():
    # lower bound 0.52 W; carrying R on the common message needs 0.55 W
    r = -np.log2(1.0 - 0.55 / 1.04)
    inst = unit_instance([25.0, 100.0], r, p_max=1.0)
    sol = solve_two_user_fast(inst)
    assert sol.powers.p0 == pytest.approx(0.55, rel=1e-12)
    assert sol.rates[0] == pytest.approx(r, rel=1e-12)
    # with the SIC bound above the common-rate power, the bound wins
    tight = inst.replace(theta=0.1 * 25.0)
    assert solve_two_user_fast(tight).powers.p0 == pytest.approx(p0_bounds(tight)[0], rel=1e-12)


def test_single_user_sum_rate_independent_of_p0():
    inst = table_instance([2e-10], r=1e6)
    sol, trace = solve_rsma(inst)
    ref = inst.bandwidth * np.log2(1 + inst.h[0] * inst.p_max / inst.sigma2)
    assert sol.sum_rate == pytest.approx(ref, rel=1e-12)
    # a 1e5-point scan of the objective is flat
    scan = np.linspace(*p0_bounds(inst), 100_000)
    obj, _, _, _ = split_batch(inst, scan, common_term(inst, scan), SolverParams())
    total = common_term(inst, scan) + obj
    assert np.max(np.abs(total - ref)) <= 1e-9 * ref


@pytest.mark.parametrize("seed", range(3))
def test_grid_search_matches_fine_scan(seed):
    inst = random_instance(2, seed=seed).replace(r_min=[0.7e6, 1.3e6])
    sol, trace = solve_rsma(inst)
    scan = np.linspace(*p0_bounds(inst), 100_000)
    c1 = common_term(inst, scan)
    obj, _, _, _ = split_batch(inst, scan, c1, SolverParams())
    best = np.max(c1 + obj)
    step = np.diff(trace.p0_grid).max()
    slope = np.max(np.abs(np.diff(c1 + obj)) / np.diff(scan), where=np.isfinite(obj[1:] + obj[:-1]), initial=0)
    assert sol.sum_rate >= best - step * slope - 1e-9 * best
    assert sol.sum_rate <= best + 1e-9 * best


def test_zero_demand_prefers_lowest_common_power():
    inst = table_instance([3e-11, 4e-10, 2e-9], r=0.0)
    sol, trace = solve_rsma(inst)
    assert trace.best_index == 0
    assert sol.powers.p0 == p0_bounds(inst)[0]
    assert check_solution(inst, sol) == []


def test_halving_step_never_loses():
    inst = random_instance(3, seed=4).replace(r_min=[0.6e6, 1.0e6, 1.4e6])
    xi = 0.01
    prev = solve_rsma(inst, SolverParams(xi=xi))[0].sum_rate
    for _ in range(4):
        xi /= 2
        cur = solve_rsma(inst, SolverParams(xi=xi))[0].sum_rate
        assert cur >= prev - 1e-12 * prev
        prev = cur


def test_evaluation_count_linear_in_grid():
    inst = random_instance(3, seed=2).replace(r_min=[0.5e6, 1e6, 1.5e6])
    for xi in (0.05, 0.01):
        _, trace = solve_rsma(inst, SolverParams(xi=xi))
        assert trace.candidate_evaluations == trace.p0_grid.size * raw_candidate_count(3)
    assert raw_candidate_count(3) == 44


def test_auto_dispatch_paths():
    two = random_instance(2, seed=0)
    sol, trace = solve_rsma_auto(two)
    assert sol.fast_path == "two_user_fast" and trace.summary()["grid_points"] == 1
    three = random_instance(3, seed=0)
    assert solve_rsma_auto(three)[0].fast_path == "equal_demand"
    mixed = three.replace(r_min=[0.5e6, 1e6, 1.5e6])
    assert solve_rsma_auto(mixed)[0].fast_path == "general"


def test_fast_path_matches_grid_search():
    for seed in range(10):
        inst = random_instance(2, seed=seed)
        try:
            fast = solve_two_user_fast(inst)
        except Infeasible:
            continue
        grid, _ = solve_rsma(inst)
        assert fast.sum_rate >= grid.sum_rate - 1e-6 * grid.sum_rate
        assert fast.sum_rate == pytest.approx(grid.sum_rate, rel=1e-3)


def test_fast_path_falls_back_when_strong_user_binds():
    inst = unit_instance([1.28, 17.3], 0.9, p_max=1.0, theta=0.16)
    with pytest.raises(PowerBudgetInfeasible):
        solve_two_user_fast(inst)
    sol, trace = solve_rsma_auto(inst)
    assert sol.fast_path == "equal_demand"
    assert check_solution(inst, sol) == []
    assert sol.sum_rate == pytest.approx(solve_rsma(inst)[0].sum_rate, rel=1e-12)


def test_equal_and_enumerate_agree_on_equal_demands():
    inst = random_instance(3, seed=6)
    a = solve_rsma(inst, method="equal")[0]
    b = solve_rsma(inst, method="enumerate")[0]
    assert a.sum_rate == pytest.approx(b.sum_rate, rel=1e-10)


@pytest.mark.parametrize("seed", range(6))
def test_solution_invariants(seed):
    inst = random_instance(3, seed=seed).replace(r_min=[0.4e6, 0.8e6, 1.2e6])
    try:
        sol, trace = solve_rsma(inst)
    except Infeasible:
        pytest.skip("random drop infeasible")
    assert check_solution(inst, sol) == []
    assert sol.rates.sum() == pytest.approx(sol.common_rate_c1, rel=1e-9)
    assert trace.objective_at_p0[trace.best_index] == pytest.approx(sol.sum_rate, rel=1e-9)
    assert sol.k_star in range(3)


def test_infeasible_demands_report_constraint():
    inst = random_instance(3, seed=0).replace(r_min=4e7)
    with pytest.raises(Infeasible) as err:
        solve_rsma(inst)
    assert err.value.constraint == "min_rate_demand"
    assert err.value.details["need"] > err.value.details["budget"]
