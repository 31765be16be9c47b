import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import gains_strategy, table_instance, unit_instance
from rsma import (
    Infeasible,
    NetworkInstance,
    PowerAllocation,
    PowerBudgetInfeasible,
    RateCapViolation,
    SolverParams,
    common_rate,
    private_rate,
    private_rates,
    sic_feasible,
)
from rsma.model import EmptyP0Range, per_user_common_rates


def test_instance_broadcasts_scalar_demand_and_freezes():
    inst = unit_instance([1.0, 2.0, 3.0], 0.5)
    assert inst.r_min.tolist() == [0.5, 0.5, 0.5]
    with pytest.raises(ValueError):
        inst.h[0] = 5.0
    with pytest.raises(Exception):
        inst.p_max = 2.0


@pytest.mark.parametrize(
    "kw",
    [
        dict(h=[2.0, 1.0]),
        dict(h=[0.0, 1.0]),
        dict(sigma2=0.0),
        dict(bandwidth=-1.0),
        dict(p_max=0.0),
        dict(theta=-1.0),
        dict(r_min=[-1.0, 1.0]),
        dict(h=[]),
    ],
)
def test_instance_validation(kw):
    base = dict(h=[1.0, 2.0], sigma2=1.0, bandwidth=1.0, p_max=1.0, theta=0.0, r_min=1.0)
    base.update(kw)
    with pytest.raises(ValueError):
        NetworkInstance(**base)


def test_replace_revalidates():
    inst = unit_instance([1.0, 2.0], 1.0)
    assert inst.replace(p_max=3.0).p_max == 3.0
    with pytest.raises(ValueError):
        inst.replace(h=[3.0, 1.0])


def test_equal_demand_flag():
    assert unit_instance([1.0, 2.0], [1.0, 1.0]).equal_demand()
    assert not unit_instance([1.0, 2.0], [1.0, 1.5]).equal_demand()


def test_solver_params_positive():
    with pytest.raises(ValueError):
        SolverParams(xi=0.0)
    with pytest.raises(ValueError):
        SolverParams(eps_rate=0.0)


def test_error_hierarchy_carries_constraint():
    exc = PowerBudgetInfeasible("x", constraint="private_power_budget", need=2.0)
    assert isinstance(exc, Infeasible)
    assert exc.constraint == "private_power_budget"
    assert exc.details["need"] == 2.0
    assert issubclass(RateCapViolation, Infeasible)
    assert issubclass(EmptyP0Range, Infeasible)


def test_common_rate_zero_power():
    inst = unit_instance([1.0, 2.0], 0.0)
    assert common_rate(inst, PowerAllocation(0.0, [0.3, 0.2])) == 0.0


def test_common_rate_unit_snr():
    # h_1 = sigma^2 so sigma^2 / h_1 = 1 W; p0 = 1 W, no privates -> c1 = B
    inst = unit_instance([1.0, 4.0], 0.0, p_max=1.0)
    assert common_rate(inst, PowerAllocation(1.0, [0.0, 0.0])) == pytest.approx(1.0, rel=1e-15)


def test_private_rate_cases():
    inst = unit_instance([1.0], 0.0)
    assert private_rate(inst, PowerAllocation(0.0, [1.0]), 0) == pytest.approx(1.0)
    inst2 = unit_instance([1.0, 2.0], 0.0)
    assert private_rate(inst2, PowerAllocation(0.0, [0.0, 1.0]), 0) == 0.0


@given(gains_strategy(st, 3), st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4))
def test_common_rate_is_min_over_users(h, p):
    inst = table_instance(h)
    alloc = PowerAllocation(p[0], p[1:])
    # naive recomputation of each user's common-decoding rate
    s = sum(p[1:])
    naive = [inst.bandwidth * np.log2(1 + hk * p[0] / (hk * s + inst.sigma2)) for hk in inst.h]
    assert common_rate(inst, alloc) == pytest.approx(min(naive), rel=1e-12, abs=1e-9)
    assert int(np.argmin(per_user_common_rates(inst, alloc))) == int(np.argmin(naive))


@given(gains_strategy(st, 3), st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3))
def test_private_rates_match_symbolic_formula(h, p):
    inst = table_instance(h)
    alloc = PowerAllocation(0.2, p)
    for k in range(3):
        interf = sum(p) - p[k]
        ref = inst.bandwidth * np.log2(1 + inst.h[k] * p[k] / (inst.h[k] * interf + inst.sigma2))
        assert private_rate(inst, alloc, k) == pytest.approx(ref, rel=1e-12, abs=1e-9)


def test_weakest_user_limits_common_rate_under_strict_sorting():
    inst = table_instance([1e-11, 5e-11, 1e-9])
    rates = per_user_common_rates(inst, PowerAllocation(0.6, [0.1, 0.1, 0.2]))
    assert int(np.argmin(rates)) == 0
    assert np.all(np.diff(rates) > 0)


@given(gains_strategy(st, 3), st.integers(0, 2), st.floats(1e-4, 0.1))
def test_rate_monotonicity_in_powers(h, k, delta):
    inst = table_instance(h)
    base = np.array([0.2, 0.15, 0.1])
    r0 = private_rates(inst, PowerAllocation(0.5, base))
    bumped = base.copy()
    bumped[k] += delta
    r1 = private_rates(inst, PowerAllocation(0.5, bumped))
    assert np.all(r1 >= 0) and np.all(r0 >= 0)
    assert r1[k] >= r0[k]
    others = np.arange(3) != k
    assert np.all(r1[others] <= r0[others])
    c0 = common_rate(inst, PowerAllocation(0.5, base))
    assert common_rate(inst, PowerAllocation(0.5 + delta, base)) >= c0
    assert common_rate(inst, PowerAllocation(0.5, bumped)) <= c0


def test_sic_feasible_cases():
    inst = unit_instance([10.0, 20.0], 0.0, p_max=1.0, theta=0.5)
    assert sic_feasible(inst, PowerAllocation(1.0, [0.0, 0.0]))
    assert not sic_feasible(inst, PowerAllocation(0.0, [0.1, 0.0]))
    gap = (inst.theta + inst.sigma2) / inst.h[0]  # 0.15 W
    assert sic_feasible(inst, PowerAllocation(0.2 + gap, [0.1, 0.1]))
    assert not sic_feasible(inst, PowerAllocation(0.2 + gap - 1e-9, [0.1, 0.1]))


def test_solution_record_is_plain_json_types():
    import json

    from rsma import solve_rsma

    sol, _ = solve_rsma(table_instance([3e-11, 4e-10]))
    json.dumps(sol.as_record())
