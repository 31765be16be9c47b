import csv
import math
from dataclasses import replace

import numpy as np
import pytest

import rsma.private_power as pp
import rsma.rate_alloc as ra
from rsma import random_instance, solve_rsma
from rsma.experiments import (
    CDF_COLUMNS,
    SUMMARY_COLUMNS,
    SWEEP_COLUMNS,
    ExperimentSpec,
    cdf_rows,
    fmt,
    paired_trials,
    region_rows,
    run_sweep,
    run_verify,
    summarize,
    sweep_means,
    write_csv,
)


def test_fmt_round_trips():
    for x in (0.1, 1e-300, 16648630.174766293, -2.5):
        assert float(fmt(x)) == x
    assert fmt(float("nan")) == "nan"
    assert fmt(True) == "1" and fmt(np.int64(7)) == "7" and fmt("RSMA") == "RSMA"


def test_write_csv_header_only(tmp_path):
    out = tmp_path / "x.csv"
    write_csv(out, CDF_COLUMNS, [])
    assert out.read_text() == ",".join(CDF_COLUMNS) + "\n"


@pytest.mark.parametrize(
    "kw",
    [
        dict(schemes=("TDMA",)),
        dict(sweep_var="bogus"),
        dict(trials=0),
        dict(sweep_var="theta_dbm"),
        dict(sweep_var="num_users", sweep_values=(2.5,)),
        dict(sweep_var="num_users", sweep_values=(2,), r_min=(1e6, 1e6, 1e6)),
        dict(r_min=(1e6, 1e6)),
        dict(sweep_var="r_min", sweep_values=(1e6,), sweep_user=5),
        dict(xi_rel=0.0),
    ],
)
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        ExperimentSpec(**kw)


def test_instances_are_paired_across_sweep_values():
    spec = ExperimentSpec(sweep_var="theta_dbm", sweep_values=(-100.0, -80.0), trials=3)
    for t in range(3):
        a, b = spec.instance(-100.0, t), spec.instance(-80.0, t)
        assert np.array_equal(a.h, b.h)
        assert a.theta < b.theta
    assert not np.array_equal(spec.instance(-100.0, 0).h, spec.instance(-100.0, 1).h)


def test_r_min_sweep_changes_one_user():
    spec = ExperimentSpec(sweep_var="r_min", sweep_values=(2e6,), sweep_user=0, trials=1)
    assert spec.instance(2e6, 0).r_min.tolist() == [2e6, 1e6, 1e6]


def test_num_users_sweep_sizes():
    spec = ExperimentSpec(sweep_var="num_users", sweep_values=(2, 4), trials=1)
    assert spec.instance(4, 0).num_users == 4


def test_sweep_rows_order_and_summary():
    spec = ExperimentSpec(sweep_var="p_max_dbm", sweep_values=(25.0, 35.0), trials=4, num_users=2)
    rows = run_sweep(spec)
    assert len(rows) == 2 * 4 * 3
    assert [r.scheme for r in rows[:3]] == ["RSMA", "NOMA", "OFDMA"]
    assert all(len(r.cells()) == len(SWEEP_COLUMNS) for r in rows)
    summary = summarize(rows, spec)
    assert len(summary) == 6
    assert all(len(s) == len(SUMMARY_COLUMNS) for s in summary)
    means, table = sweep_means(rows, spec)
    assert means.shape == (2, 3) and table.shape == (2, 4, 3)
    mask = paired_trials(table)
    assert summary[0][7] == int(mask.sum())


def test_sweep_is_deterministic_and_worker_invariant():
    spec = ExperimentSpec(sweep_var="theta_dbm", sweep_values=(-94.0,), trials=3)
    a = [r.cells()[:-1] for r in run_sweep(spec)]
    b = [r.cells()[:-1] for r in run_sweep(spec)]
    assert a == b
    c = [r.cells()[:-1] for r in run_sweep(replace(spec, workers=2))]
    assert [x[:5] for x in a] == [x[:5] for x in c]
    assert all(
        (math.isnan(x[5]) and math.isnan(y[5])) or x[5] == y[5] for x, y in zip(a, c)
    )


def test_cdf_needs_enough_trials():
    with pytest.raises(ValueError):
        cdf_rows(ExperimentSpec(trials=1))


def test_rsma_cdf_dominates_ofdma():
    spec = ExperimentSpec(schemes=("RSMA", "OFDMA"), trials=500)
    rows = cdf_rows(spec)
    rs = np.array([r[2] for r in rows if r[0] == "RSMA"])
    of = np.array([r[2] for r in rows if r[0] == "OFDMA"])
    assert rs.size == of.size >= 400
    assert np.all(rs >= of)
    q = [r[3] for r in rows if r[0] == "RSMA"]
    assert q[-1] == 1.0 and np.all(np.diff(q) > 0)


def test_region_rows_schema():
    rows = region_rows(random_instance(2, seed=0), sweep_points=5)
    assert {r[0] for r in rows} == {"RSMA", "NOMA"}
    assert all(len(r) == 3 for r in rows)


def test_write_then_read_sweep_csv(tmp_path):
    spec = ExperimentSpec(trials=2)
    rows = run_sweep(spec)
    out = tmp_path / "s.csv"
    write_csv(out, SWEEP_COLUMNS, (r.cells() for r in rows))
    with open(out) as fh:
        back = list(csv.DictReader(fh))
    assert len(back) == len(rows)
    assert float(back[0]["sum_rate_bps"]) == rows[0].sum_rate_bps


def test_verify_passes_on_correct_solver():
    report = run_verify(5, seed=0, num_users=2)
    assert report.passed
    assert report.lines()[0].startswith("verify K=2 count=5 seed=0: PASS")


def test_verify_catches_flipped_selection(monkeypatch):
    def wrong(inst, a, p0):
        # comparison flipped: the worst user takes the leftover power
        score = (np.asarray(a) - inst.r_min) / inst.bandwidth + np.log2(pp._weights(inst, p0))
        return np.argmax(score, axis=-1)

    monkeypatch.setattr(ra, "_k_star_batch", wrong)
    monkeypatch.setattr(pp, "_k_star_batch", wrong)
    report = run_verify(3, seed=0, num_users=3)
    assert not report.passed
    assert any(line.strip().startswith("seed ") for line in report.lines()[1:])


def test_verify_catches_suboptimal_solver():
    def lazy(inst, params):
        sol, trace = solve_rsma(inst, params)
        return type(sol)(
            rates=sol.rates, powers=sol.powers, k_star=sol.k_star,
            common_rate_c1=sol.common_rate_c1, user_total_rates=sol.user_total_rates * 0.9,
            sum_rate=sol.sum_rate * 0.9, fast_path=sol.fast_path,
        ), trace

    report = run_verify(2, seed=0, num_users=2, solver=lazy)
    assert not report.passed
    assert sorted({s for s, _ in report.failures}) == [0, 1]
    assert any("oracle beats solver" in why for _, why in report.failures)
